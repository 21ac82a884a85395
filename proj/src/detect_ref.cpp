#include "sumis/detect_ref.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sumis/linalg.hpp"
#include "sumis/opcount.hpp"

namespace sumis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int bit_of_label(int label, int bit, int bits_per_symbol) {
    return (label >> (bits_per_symbol - 1 - bit)) & 1;
}

// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
RealVector jacobi_eigenvalues(RealMatrix a) {
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = cs * akp - sn * akq;
                    a(k, q) = sn * akp + cs * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = cs * apk - sn * aqk;
                    a(q, k) = sn * apk + cs * aqk;
                }
            }
    }
    RealVector ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    return ev;
}

// 2-norm condition number of a tall matrix via its gram eigenvalues.
double condition_number(const RealMatrix& m) {
    if (m.cols() <= 1) return 1.0;
    RealVector ev = jacobi_eigenvalues(gram(m));
    double lo = ev[0], hi = ev[0];
    for (double v : ev) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(hi / lo);
}

// Shared Gray-sweep state: residual r = y - H s with O(Nr) updates per step.
struct Sweep {
    const RealMatrix& h;
    const Constellation& c;
    RealVector r;
    std::vector<int> digits;

    Sweep(const RealMatrix& h_in, const RealVector& y, const Constellation& c_in)
        : h(h_in), c(c_in), r(y), digits(h_in.cols(), 0) {
        for (std::size_t j = 0; j < h.cols(); ++j)
            for (std::size_t i = 0; i < h.rows(); ++i) r[i] -= h(i, j) * c.points[0];
        ops::elem(2 * h.rows() * h.cols());
    }

    void step(int coord, int delta) {
        const int nd = digits[coord] + delta;
        const double dp = c.points[nd] - c.points[digits[coord]];
        digits[coord] = nd;
        for (std::size_t i = 0; i < h.rows(); ++i) r[i] -= dp * h(i, coord);
        ops::elem(1 + 2 * h.rows());
    }
};

}  // namespace

double clip_llr(double v, double llr_clip) {
    if (std::isnan(v)) return 0.0;
    return std::clamp(v, -llr_clip, llr_clip);
}

PriorInfo PriorInfo::uniform(int n_t, int m) {
    PriorInfo p;
    p.pmf = RealMatrix(n_t, m, 1.0 / m);
    return p;
}

RealVector prior_means(const PriorInfo& prior, const Constellation& c) {
    RealVector mu(prior.n_t(), 0.0);
    for (int k = 0; k < prior.n_t(); ++k)
        for (int i = 0; i < prior.m(); ++i) mu[k] += prior.pmf(k, i) * c.points[i];
    return mu;
}

RealVector prior_variances(const PriorInfo& prior, const Constellation& c) {
    RealVector mu = prior_means(prior, c);
    RealVector var(prior.n_t(), 0.0);
    for (int k = 0; k < prior.n_t(); ++k) {
        for (int i = 0; i < prior.m(); ++i) {
            const double d = c.points[i] - mu[k];
            var[k] += prior.pmf(k, i) * d * d;
        }
        if (var[k] < 0.0) var[k] = 0.0;
    }
    return var;
}

LlrVector exact_llr(const RealChannel& ch, const RealVector& y, const Constellation& c,
                    const PriorInfo& prior, double llr_clip) {
    const int n_t = static_cast<int>(ch.h.cols());
    const int m = c.size();
    const int b = c.bits_per_symbol;
    require_enumeration_guard(n_t, m);
    if (prior.n_t() != n_t || prior.m() != m) throw ShapeError("exact_llr: prior shape mismatch");
    if (y.size() != ch.h.rows()) throw ShapeError("exact_llr: y length mismatch");

    // Per-coordinate log prior terms, with -inf (zero probability) tracked
    // separately so leaving a forbidden point never produces inf - inf.
    RealMatrix logp(n_t, m);
    for (int k = 0; k < n_t; ++k)
        for (int i = 0; i < m; ++i) logp(k, i) = prior.pmf(k, i) > 0.0 ? std::log(prior.pmf(k, i)) : kNegInf;

    double finite_logp = 0.0;
    int ninf_terms = 0;
    for (int k = 0; k < n_t; ++k) {
        if (logp(k, 0) == kNegInf)
            ++ninf_terms;
        else
            finite_logp += logp(k, 0);
    }

    const int n_bits = n_t * b;
    std::vector<double> acc0(n_bits, kNegInf), acc1(n_bits, kNegInf);

    Sweep sw(ch.h, y, c);
    GrayCounter g(n_t, m);
    const double inv_n0 = 1.0 / ch.n0;

    auto accumulate = [&]() {
        const double metric =
            (ninf_terms > 0) ? kNegInf : -norm2(sw.r) * inv_n0 + finite_logp;
        ops::elem(2);
        for (int k = 0; k < n_t; ++k) {
            const int label = c.labels[sw.digits[k]];
            for (int j = 0; j < b; ++j) {
                double& acc = bit_of_label(label, j, b) ? acc1[k * b + j] : acc0[k * b + j];
                acc = jacobian_log_sum(acc, metric);
            }
        }
    };

    accumulate();
    int coord, delta;
    while (g.next(coord, delta)) {
        const int old_d = sw.digits[coord];
        const int new_d = old_d + delta;
        if (logp(coord, old_d) == kNegInf)
            --ninf_terms;
        else
            finite_logp -= logp(coord, old_d);
        if (logp(coord, new_d) == kNegInf)
            ++ninf_terms;
        else
            finite_logp += logp(coord, new_d);
        sw.step(coord, delta);
        accumulate();
    }

    LlrVector out(n_bits);
    for (int i = 0; i < n_bits; ++i) out[i] = clip_llr(acc1[i] - acc0[i], llr_clip);
    return out;
}

LlrVector max_log(const RealChannel& ch, const RealVector& y, const Constellation& c, double llr_clip) {
    const int n_t = static_cast<int>(ch.h.cols());
    const int m = c.size();
    const int b = c.bits_per_symbol;
    require_enumeration_guard(n_t, m);
    if (y.size() != ch.h.rows()) throw ShapeError("max_log: y length mismatch");

    const int n_bits = n_t * b;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> min0(n_bits, inf), min1(n_bits, inf);

    Sweep sw(ch.h, y, c);
    GrayCounter g(n_t, m);
    const double inv_n0 = 1.0 / ch.n0;

    auto accumulate = [&]() {
        const double metric = norm2(sw.r) * inv_n0;
        ops::elem(1);
        for (int k = 0; k < n_t; ++k) {
            const int label = c.labels[sw.digits[k]];
            for (int j = 0; j < b; ++j) {
                double& mn = bit_of_label(label, j, b) ? min1[k * b + j] : min0[k * b + j];
                mn = std::min(mn, metric);
            }
        }
    };

    accumulate();
    int coord, delta;
    while (g.next(coord, delta)) {
        sw.step(coord, delta);
        accumulate();
    }

    LlrVector out(n_bits);
    for (int i = 0; i < n_bits; ++i) out[i] = clip_llr(min0[i] - min1[i], llr_clip);
    ops::elem(n_bits);
    return out;
}

RealVector zf_df(const RealMatrix& h_tilde, const RealVector& residual, const Constellation& c) {
    const std::size_t rows = h_tilde.rows(), nt = h_tilde.cols();
    if (rows < nt || nt == 0) throw ShapeError("zf_df: matrix must be tall and nonempty");
    if (residual.size() != rows) throw ShapeError("zf_df: residual length mismatch");

    const double rank_floor = 1e-10 * frobenius_norm(h_tilde);

    // Sorted modified Gram-Schmidt QR: pick the largest remaining column
    // first; perm[j] is the original index of QR column j. Off-diagonal R
    // entries are keyed by original column (r_orig) since a column's final
    // QR position is unknown until it is pivoted.
    RealMatrix q(rows, nt);
    RealMatrix r_orig(nt, nt);
    RealVector r_diag(nt, 0.0);
    std::vector<int> perm(nt);
    std::vector<bool> used(nt, false);
    RealMatrix work = h_tilde;
    std::uint64_t count = 0;

    for (std::size_t j = 0; j < nt; ++j) {
        int best = -1;
        double best_n = -1.0;
        for (std::size_t l = 0; l < nt; ++l) {
            if (used[l]) continue;
            double n = 0.0;
            for (std::size_t i = 0; i < rows; ++i) n += work(i, l) * work(i, l);
            count += 2 * rows;
            if (n > best_n) {
                best_n = n;
                best = static_cast<int>(l);
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        perm[j] = best;
        const double nrm = std::sqrt(best_n);
        ops::transc(1);
        if (nrm < rank_floor) throw RankDeficient("zf_df: rank-deficient matrix");
        r_diag[j] = nrm;
        for (std::size_t i = 0; i < rows; ++i) q(i, j) = work(i, static_cast<std::size_t>(best)) / nrm;
        count += rows;
        for (std::size_t l = 0; l < nt; ++l) {
            if (used[l]) continue;
            double proj = 0.0;
            for (std::size_t i = 0; i < rows; ++i) proj += q(i, j) * work(i, l);
            r_orig(j, l) = proj;
            for (std::size_t i = 0; i < rows; ++i) work(i, l) -= proj * q(i, j);
            count += 4 * rows;
        }
    }

    // z = Qᵀ residual, then layered back-substitution with quantization.
    RealVector z(nt, 0.0);
    for (std::size_t j = 0; j < nt; ++j) {
        for (std::size_t i = 0; i < rows; ++i) z[j] += q(i, j) * residual[i];
        count += 2 * rows;
    }
    RealVector x(nt, 0.0);  // quantized amplitude per QR column
    for (std::size_t jj = nt; jj-- > 0;) {
        double v = z[jj];
        for (std::size_t k = jj + 1; k < nt; ++k) v -= r_orig(jj, static_cast<std::size_t>(perm[k])) * x[k];
        v /= r_diag[jj];
        count += 2 * (nt - jj - 1) + 1;
        // nearest constellation point
        int best = 0;
        double best_d = std::fabs(v - c.points[0]);
        for (int i = 1; i < c.size(); ++i) {
            const double d = std::fabs(v - c.points[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        x[jj] = c.points[best];
    }
    ops::elem(count);

    RealVector s(nt);
    for (std::size_t j = 0; j < nt; ++j) s[static_cast<std::size_t>(perm[j])] = x[j];
    return s;
}

LlrVector pm_detect(const RealChannel& ch, const RealVector& y, int ns, const Constellation& c,
                    double llr_clip) {
    const int n_t = static_cast<int>(ch.h.cols());
    const int m = c.size();
    const int b = c.bits_per_symbol;
    if (ns < 1 || ns > n_t) throw std::invalid_argument("pm_detect: ns must be in 1..nT");
    require_enumeration_guard(ns, m);
    if (y.size() != ch.h.rows()) throw ShapeError("pm_detect: y length mismatch");

    if (ns == n_t) return exact_llr(ch, y, c, PriorInfo::uniform(n_t, m), llr_clip);

    const double inv_n0 = 1.0 / ch.n0;
    LlrVector out(static_cast<std::size_t>(n_t) * b);

    for (int bit = 0; bit < n_t * b; ++bit) {
        const int anchor = bit / b;
        const int sub_bit = bit % b;

        // Greedy partition: repeatedly move to the marginalized set the
        // column whose removal most improves the conditioning of what stays.
        std::vector<int> bar{anchor};
        std::vector<int> avail;
        for (int l = 0; l < n_t; ++l)
            if (l != anchor) avail.push_back(l);
        while (static_cast<int>(bar.size()) < ns) {
            int best = -1;
            double best_cond = std::numeric_limits<double>::infinity();
            for (std::size_t cand = 0; cand < avail.size(); ++cand) {
                std::vector<int> rest;
                for (std::size_t l = 0; l < avail.size(); ++l)
                    if (l != cand) rest.push_back(avail[l]);
                const double cn = rest.empty() ? 1.0 : condition_number(pick_columns(ch.h, rest));
                if (cn < best_cond) {
                    best_cond = cn;
                    best = static_cast<int>(cand);
                }
            }
            bar.push_back(avail[static_cast<std::size_t>(best)]);
            avail.erase(avail.begin() + best);
        }

        const RealMatrix h_bar = pick_columns(ch.h, bar);
        const RealMatrix h_tilde = pick_columns(ch.h, avail);

        double acc0 = kNegInf, acc1 = kNegInf;
        Sweep sw(h_bar, y, c);  // residual y - H̄ s̄
        GrayCounter g(static_cast<int>(bar.size()), m);
        auto accumulate = [&]() {
            const RealVector s_tilde = zf_df(h_tilde, sw.r, c);
            RealVector rem = sw.r;
            for (std::size_t j = 0; j < h_tilde.cols(); ++j)
                for (std::size_t i = 0; i < rem.size(); ++i) rem[i] -= h_tilde(i, j) * s_tilde[j];
            ops::elem(2 * h_tilde.cols() * rem.size());
            const double metric = -norm2(rem) * inv_n0;
            ops::elem(1);
            const int label = c.labels[sw.digits[0]];  // anchor sits at bar[0]
            double& acc = bit_of_label(label, sub_bit, b) ? acc1 : acc0;
            acc = jacobian_log_sum(acc, metric);
        };
        accumulate();
        int coord, delta;
        while (g.next(coord, delta)) {
            sw.step(coord, delta);
            accumulate();
        }
        out[bit] = clip_llr(acc1 - acc0, llr_clip);
    }
    return out;
}

}  // namespace sumis
