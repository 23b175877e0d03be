#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace schrolab {

// Invalid input or configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical invariant failed (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, std::vector<double> data = {})
        : std::runtime_error(what), data_(std::move(data)) {}
    const std::vector<double>& data() const { return data_; }

private:
    std::vector<double> data_;
};

class SingularMatrixError : public NumericError {
public:
    SingularMatrixError(const std::string& what, double measure)
        : NumericError(what, {measure}), measure_(measure) {}
    double measure() const { return measure_; }

private:
    double measure_;
};

class ParityError : public NumericError {
public:
    ParityError(const std::string& what, double asymmetry)
        : NumericError(what, {asymmetry}), asymmetry_(asymmetry) {}
    double asymmetry() const { return asymmetry_; }

private:
    double asymmetry_;
};

}  // namespace schrolab
