#include "sumis/model.hpp"

#include <cmath>

namespace sumis {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Rng Rng::for_frame(std::uint64_t seed, std::uint64_t frame_index) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(frame_index + 0x517cc1b727220a95ULL)));
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

RealMatrix complex_to_real(const ComplexMatrix& hc) {
    const std::size_t r = hc.rows(), c = hc.cols();
    RealMatrix h(2 * r, 2 * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double re = hc(i, j).real(), im = hc(i, j).imag();
            h(i, j) = re;
            h(i, j + c) = -im;
            h(i + r, j) = im;
            h(i + r, j + c) = re;
        }
    return h;
}

std::pair<RealMatrix, RealVector> complex_to_real(const ComplexMatrix& hc,
                                                  const std::vector<std::complex<double>>& yc) {
    if (yc.size() != hc.rows()) throw ShapeError("complex_to_real: y length must match channel rows");
    RealVector y(2 * yc.size());
    for (std::size_t i = 0; i < yc.size(); ++i) {
        y[i] = yc[i].real();
        y[i + yc.size()] = yc[i].imag();
    }
    return {complex_to_real(hc), std::move(y)};
}

ComplexMatrix sample_rayleigh(int n_t, int n_r, Rng& rng) {
    if (n_t < 1 || n_r < 1) throw std::invalid_argument("sample_rayleigh: dimensions must be >= 1");
    ComplexMatrix h(static_cast<std::size_t>(n_r), static_cast<std::size_t>(n_t));
    const double s = std::sqrt(0.5);  // unit total variance per entry
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j)
            h(i, j) = {s * rng.gaussian(), s * rng.gaussian()};
    return h;
}

Constellation make_constellation(int m) {
    if (m != 2 && m != 4 && m != 8) throw UnsupportedOrder("make_constellation: order must be 2, 4 or 8");
    Constellation c;
    c.bits_per_symbol = (m == 2) ? 1 : (m == 4 ? 2 : 3);
    // Equispaced PAM amplitudes scaled to unit mean power, Gray labels.
    double power = 0.0;
    for (int i = 0; i < m; ++i) {
        const double p = 2 * i - (m - 1);
        power += p * p;
    }
    const double scale = std::sqrt(power / m);
    c.points.resize(m);
    c.labels.resize(m);
    c.point_of_label.resize(m);
    for (int i = 0; i < m; ++i) {
        c.points[i] = (2 * i - (m - 1)) / scale;
        c.labels[i] = i ^ (i >> 1);
        c.point_of_label[c.labels[i]] = i;
    }
    return c;
}

RealVector modulate(const std::vector<int>& bits, const Constellation& c, int n_t) {
    const int b = c.bits_per_symbol;
    if (bits.size() != static_cast<std::size_t>(n_t) * b)
        throw LengthMismatch("modulate: bit count must be nT * bitsPerSymbol");
    RealVector s(n_t);
    for (int k = 0; k < n_t; ++k) {
        int label = 0;
        for (int j = 0; j < b; ++j) label = (label << 1) | (bits[k * b + j] & 1);
        s[k] = c.points[c.point_of_label[label]];
    }
    return s;
}

std::vector<int> hard_demap(const RealVector& s, const Constellation& c) {
    const int b = c.bits_per_symbol;
    std::vector<int> bits(s.size() * b);
    for (std::size_t k = 0; k < s.size(); ++k) {
        int best = 0;
        double best_d = std::fabs(s[k] - c.points[0]);
        for (int i = 1; i < c.size(); ++i) {
            const double d = std::fabs(s[k] - c.points[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        const int label = c.labels[best];
        for (int j = 0; j < b; ++j) bits[k * b + j] = (label >> (b - 1 - j)) & 1;
    }
    return bits;
}

double ebn0_to_n0(double ebn0_db, double code_rate, const Constellation& c) {
    if (code_rate <= 0.0 || code_rate > 1.0) throw std::invalid_argument("ebn0_to_n0: rate must be in (0,1]");
    const double eb = 1.0 / (code_rate * c.bits_per_symbol);
    return eb / std::pow(10.0, ebn0_db / 10.0);
}

ChannelEstimate corrupt_channel(const RealMatrix& h, double delta2, Rng& rng) {
    if (delta2 < 0.0) throw std::invalid_argument("corrupt_channel: delta2 must be >= 0");
    if (h.rows() % 2 != 0 || h.cols() % 2 != 0)
        throw ShapeError("corrupt_channel: channel must carry the stacked complex structure");
    ChannelEstimate est;
    est.delta2 = delta2;
    est.h_hat = h;
    if (delta2 == 0.0) return est;
    const std::size_t r = h.rows() / 2, c = h.cols() / 2;
    const double s = std::sqrt(delta2 / 2.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double re = s * rng.gaussian(), im = s * rng.gaussian();
            est.h_hat(i, j) += re;
            est.h_hat(i, j + c) += -im;
            est.h_hat(i + r, j) += im;
            est.h_hat(i + r, j + c) += re;
        }
    return est;
}

}  // namespace sumis
