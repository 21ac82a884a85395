#ifndef SUMIS_MODEL_HPP
#define SUMIS_MODEL_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sumis/matrix.hpp"

namespace sumis {

struct UnsupportedOrder : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Seedable generator: mt19937_64 for raw bits (its output sequence is fixed
// by the standard, hence portable), manual Box-Muller for gaussians because
// std::normal_distribution is not bit-reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Independent stream for one frame, derived by splitmix64 mixing of
    // (seed, frameIndex). Streams for distinct frames never share state.
    static Rng for_frame(std::uint64_t seed, std::uint64_t frame_index);

    std::uint64_t next_u64() { return engine_(); }
    double uniform();   // [0, 1)
    double gaussian();  // N(0, 1)

    static constexpr const char* algorithm = "mt19937_64 + Box-Muller";

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::complex<double>& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    std::complex<double> operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<std::complex<double>> a_;
};

// y = Hs + e with e ~ N(0, (n0/2) I); h is the real-valued 2Nr x 2Nt form.
struct RealChannel {
    RealMatrix h;
    double n0 = 1.0;
};

struct Constellation {
    RealVector points;                // ascending, unit mean power
    int bits_per_symbol = 1;
    std::vector<int> labels;          // Gray label of points[i]
    std::vector<int> point_of_label;  // inverse map
    int size() const { return static_cast<int>(points.size()); }
};

struct ChannelEstimate {
    RealMatrix h_hat;
    double delta2 = 0.0;  // per-complex-entry error variance
};

// Stacked real model: y = [Re; Im], H = [[Re, -Im], [Im, Re]].
std::pair<RealMatrix, RealVector> complex_to_real(const ComplexMatrix& hc,
                                                  const std::vector<std::complex<double>>& yc);
RealMatrix complex_to_real(const ComplexMatrix& hc);

// i.i.d. CN(0,1) entries, nR x nT.
ComplexMatrix sample_rayleigh(int n_t, int n_r, Rng& rng);

Constellation make_constellation(int m);

RealVector modulate(const std::vector<int>& bits, const Constellation& c, int n_t);
std::vector<int> hard_demap(const RealVector& s, const Constellation& c);

// Unit-power symbols; information bits per real channel symbol is
// codeRate * log2(M), so Eb = 1 / (codeRate * log2 M).
double ebn0_to_n0(double ebn0_db, double code_rate, const Constellation& c);

// hHat = h + realization of the complex estimation error, variance delta2
// per complex entry; h must carry the stacked block structure.
ChannelEstimate corrupt_channel(const RealMatrix& h, double delta2, Rng& rng);

}  // namespace sumis

#endif
