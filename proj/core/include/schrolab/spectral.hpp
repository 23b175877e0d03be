#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "schrolab/errors.hpp"

namespace schrolab {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

enum class Basis { Exponential, Sine, Cosine };
enum class Parity { Odd, Even };
// Bracket: <k>^2 = 1+|k|^2.  Laplacian: |k|^2 (Dirichlet H^s_D).
enum class NormWeight { Bracket, Laplacian };

std::string basis_name(Basis b);
Basis basis_from_name(const std::string& name);

class ModeLattice {
public:
    ModeLattice(int n, int N, Basis basis);

    int dim() const { return n_; }
    int truncation() const { return N_; }
    Basis basis() const { return basis_; }
    std::size_t size() const { return norm2_.size(); }
    double axis_length() const;

    int axis_min() const;
    int axis_count() const;

    std::span<const int> index(std::size_t i) const {
        return {idx_.data() + i * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
    }
    long norm2(std::size_t i) const { return norm2_[i]; }
    double bracket2(std::size_t i) const { return 1.0 + static_cast<double>(norm2_[i]); }
    double weight(std::size_t i, double s, NormWeight w = NormWeight::Bracket) const;
    std::optional<std::size_t> find(std::span<const int> k) const;

    bool same_as(const ModeLattice& o) const {
        return n_ == o.n_ && N_ == o.N_ && basis_ == o.basis_;
    }

private:
    int n_;
    int N_;
    Basis basis_;
    std::vector<int> idx_;
    std::vector<long> norm2_;
};

using LatticePtr = std::shared_ptr<const ModeLattice>;

LatticePtr make_lattice(int n, int N, Basis basis);

class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(LatticePtr lattice);
    SpectralField(LatticePtr lattice, CVec coeffs);

    const ModeLattice& lattice() const { return *lattice_; }
    const LatticePtr& lattice_ptr() const { return lattice_; }
    Basis basis() const { return lattice_->basis(); }
    const CVec& coeffs() const { return coeffs_; }
    CVec& coeffs() { return coeffs_; }
    std::size_t size() const { return static_cast<std::size_t>(coeffs_.size()); }

    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(cplx z);

private:
    LatticePtr lattice_;
    CVec coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(cplx z, SpectralField a);

// Samples on a uniform tensor grid.  Exponential: G points per axis,
// x_j = 2*pi*j/G.  Sine/Cosine: G+1 points per axis, x_j = pi*j/G.
struct PhysicalGrid {
    int n = 0;
    int grid_size = 0;
    Basis basis = Basis::Exponential;
    std::vector<cplx> values;

    int points_per_axis() const { return basis == Basis::Exponential ? grid_size : grid_size + 1; }
    double coordinate(int j) const;
};

PhysicalGrid to_physical(const SpectralField& f, int grid_size);
SpectralField to_spectral(const PhysicalGrid& samples, LatticePtr lattice);

double sobolev_norm(const SpectralField& f, double s, NormWeight w = NormWeight::Bracket);
SpectralField free_propagate(const SpectralField& f, double t);

struct Factor {
    const SpectralField* field;
    bool conjugate;
};

// Dealiased product of several fields of one basis family, exactly projected
// onto an output lattice of truncation out_N (default: the first factor's N).
// Sine/Cosine factors are multiplied through their torus extensions; the output
// basis is Sine if the product is odd and Cosine if it is even.
SpectralField multiply(std::span<const Factor> factors, std::optional<int> out_N = std::nullopt);
SpectralField pointwise_product(const SpectralField& f, const SpectralField& g,
                                bool conj_f = false, bool conj_g = false);
int dealiased_grid_size(int total_degree, int out_N);

SpectralField odd_extend(const SpectralField& f);
SpectralField even_extend(const SpectralField& f);
SpectralField restrict_parity(const SpectralField& f, Parity parity, double tol = 1e-10);
SpectralField extend(const SpectralField& f);
double parity_asymmetry(const SpectralField& f, Parity parity);

// Exact L^2(Omega) projection of a Cosine-basis field onto a Sine lattice of truncation N.
SpectralField project_cosine_to_sine(const SpectralField& f, int N);

// Change truncation of a field of the same basis (zero-pad or truncate).
SpectralField retruncate(const SpectralField& f, int N);

// Dense matrix of multiplication by a (Exponential basis) from lattice `in` to lattice `out`:
// entry (k, m) = a_hat(k - m).
CMat convolution_matrix(const SpectralField& a, const ModeLattice& in, const ModeLattice& out);

double max_imag_physical(const SpectralField& f);
double max_abs_physical(const SpectralField& f);

std::string field_to_json(const SpectralField& f);
SpectralField field_from_json(const std::string& text);

}  // namespace schrolab
