#include "schrolab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace schrolab::fft {
namespace {

struct PlanCache {
    std::mutex mu;
    std::map<std::pair<std::vector<int>, int>, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::span<const int> dims, int sign) {
        std::vector<int> key(dims.begin(), dims.end());
        std::lock_guard<std::mutex> lock(mu);
        auto it = plans.find({key, sign});
        if (it != plans.end()) return it->second;
        std::size_t total = 1;
        for (int d : dims) total *= static_cast<std::size_t>(d);
        auto* buf = fftw_alloc_complex(total);
        fftw_plan p = fftw_plan_dft(static_cast<int>(key.size()), key.data(), buf, buf,
                                    sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        if (!p) throw std::runtime_error("fftw plan creation failed");
        plans.emplace(std::make_pair(key, sign), p);
        return p;
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

}  // namespace

void transform(std::complex<double>* data, std::span<const int> dims, int sign) {
    fftw_plan p = cache().get(dims, sign);
    auto* d = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(p, d, d);
}

void transform(std::vector<std::complex<double>>& data, std::span<const int> dims, int sign) {
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    if (data.size() != total) throw std::invalid_argument("fft: data size does not match extents");
    transform(data.data(), dims, sign);
}

int smooth_size(int n) {
    if (n <= 1) return 1;
    for (int m = n;; ++m) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

}  // namespace schrolab::fft
