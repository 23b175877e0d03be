#include "schrolab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace schrolab {

int thread_count() {
    const char* env = std::getenv("SCHROLAB_THREADS");
    if (!env) return 1;
    try {
        return std::clamp(std::stoi(env), 1, 256);
    } catch (...) {
        return 1;
    }
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const auto workers = static_cast<std::size_t>(thread_count());
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace schrolab
