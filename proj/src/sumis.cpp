#include "sumis/sumis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sumis/gray.hpp"
#include "sumis/opcount.hpp"

namespace sumis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kVarFloor = 1e-12;

int bit_of_label(int label, int bit, int bits_per_symbol) {
    return (label >> (bits_per_symbol - 1 - bit)) & 1;
}

RealMatrix symmetrized(const RealMatrix& a) {
    RealMatrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

RealMatrix inverse_sym(const RealMatrix& a) {
    // LDL-based inversion throughout: the adjugate route loses too much
    // accuracy on ill-conditioned kernels (e.g. ns = Nt, where B⁻¹ − Ψ̄
    // cancels down to (N0/2)G⁻¹).
    return a.rows() == 1 ? small_inverse(a) : spd_inverse(symmetrized(a));
}

// Running log prior over the subspace symbols, with zero-probability
// (-inf) terms counted separately so updates never form inf - inf.
struct LogPrior {
    RealMatrix logp;  // ns x M
    double finite = 0.0;
    int ninf = 0;

    LogPrior(const PriorInfo& prior, const std::vector<int>& bar, int m) : logp(bar.size(), m) {
        for (std::size_t s = 0; s < bar.size(); ++s)
            for (int i = 0; i < m; ++i) {
                const double p = prior.pmf(static_cast<std::size_t>(bar[s]), i);
                logp(s, i) = p > 0.0 ? std::log(p) : kNegInf;
            }
        for (std::size_t s = 0; s < bar.size(); ++s) add(logp(s, 0));
    }

    void add(double v) {
        if (v == kNegInf)
            ++ninf;
        else
            finite += v;
    }
    void remove(double v) {
        if (v == kNegInf)
            --ninf;
        else
            finite -= v;
    }
    void change(std::size_t slot, int old_digit, int new_digit) {
        remove(logp(slot, old_digit));
        add(logp(slot, new_digit));
    }
    double value() const { return ninf > 0 ? kNegInf : finite; }
};

// Gray sweep over the subspace with the exponent kept as a quadratic form
// -1/2 (s-center)ᵀ gk (s-center), updated differentially per step.
template <typename Visit>
void quadratic_sweep(const RealMatrix& gk, const RealVector& center, const PriorInfo& prior,
                     const std::vector<int>& bar, const Constellation& c, Visit&& visit) {
    const int ns = static_cast<int>(bar.size());
    const int m = c.size();
    LogPrior lp(prior, bar, m);

    RealVector d(ns);
    for (int i = 0; i < ns; ++i) d[i] = c.points[0] - center[i];
    RealVector g = matvec(gk, d);
    double quad = -0.5 * dot(d, g);
    ops::elem(static_cast<std::uint64_t>(ns) + 2);

    GrayCounter gc(ns, m);
    visit(gc.digits(), quad + lp.value());
    int coord, delta;
    while (gc.next(coord, delta)) {
        const int nd = gc.digits()[coord];
        const int od = nd - delta;
        const double dp = c.points[nd] - c.points[od];
        quad -= dp * g[coord] + 0.5 * dp * dp * gk(coord, coord);
        for (int i = 0; i < ns; ++i) g[i] += dp * gk(i, coord);
        ops::elem(static_cast<std::uint64_t>(2 * ns) + 6);
        lp.change(static_cast<std::size_t>(coord), od, nd);
        visit(gc.digits(), quad + lp.value());
    }
}

// Naive sweep: maintains the residual y_eff - H̄ s̄ and evaluates the full
// quadratic form against the explicit inverse at every hypothesis.
template <typename Visit>
void naive_sweep(const RealMatrix& h_bar, const RealVector& y_eff, const RealMatrix& q_inv,
                 const PriorInfo& prior, const std::vector<int>& bar, const Constellation& c,
                 Visit&& visit) {
    const int ns = static_cast<int>(h_bar.cols());
    const int m = c.size();
    LogPrior lp(prior, bar, m);

    RealVector r = y_eff;
    for (int j = 0; j < ns; ++j)
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= h_bar(i, j) * c.points[0];
    ops::elem(2 * r.size() * static_cast<std::uint64_t>(ns));

    GrayCounter gc(ns, m);
    auto emit = [&](const std::vector<int>& digits) {
        const double quad = -0.5 * quadratic_norm(r, q_inv);
        ops::elem(2);
        visit(digits, quad + lp.value());
    };
    emit(gc.digits());
    int coord, delta;
    while (gc.next(coord, delta)) {
        const int nd = gc.digits()[coord];
        const int od = nd - delta;
        const double dp = c.points[nd] - c.points[od];
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= dp * h_bar(i, coord);
        ops::elem(1 + 2 * r.size());
        lp.change(static_cast<std::size_t>(coord), od, nd);
        emit(gc.digits());
    }
}

// Normalize log-domain accumulators into a pmf row plus moments.
void finish_symbol(const std::vector<double>& acc, const Constellation& c, SoftSymbolStats& stats,
                   int k) {
    const int m = c.size();
    double mx = kNegInf;
    for (double v : acc) mx = std::max(mx, v);
    double z = 0.0;
    std::vector<double> p(m, 0.0);
    for (int i = 0; i < m; ++i) {
        p[i] = acc[i] == kNegInf ? 0.0 : std::exp(acc[i] - mx);
        z += p[i];
    }
    ops::elem(static_cast<std::uint64_t>(2 * m));
    ops::transc(static_cast<std::uint64_t>(m));
    double mean = 0.0;
    for (int i = 0; i < m; ++i) {
        p[i] /= z;
        stats.pmf(k, i) = p[i];
        mean += p[i] * c.points[i];
    }
    double var = 0.0;
    for (int i = 0; i < m; ++i) {
        const double d = c.points[i] - mean;
        var += p[i] * d * d;
    }
    ops::elem(static_cast<std::uint64_t>(6 * m));
    stats.mean[k] = mean;
    stats.variance[k] = var;
}

// Clamped posterior moments feeding stage II: saturated BPSK means are
// pulled inside +/-1 and variances floored so Φ^(±1/2) stays finite.
void purified_moments(const SoftSymbolStats& stats, const Constellation& c, RealVector& mean,
                      RealVector& var) {
    const std::size_t n = stats.mean.size();
    mean = stats.mean;
    var = stats.variance;
    for (std::size_t k = 0; k < n; ++k) {
        if (c.size() == 2) {
            mean[k] = std::clamp(mean[k], -(1.0 - kVarFloor), 1.0 - kVarFloor);
            var[k] = 1.0 - mean[k] * mean[k];
        }
        if (var[k] < kVarFloor) var[k] = kVarFloor;
    }
    ops::elem(2 * n);
}

bool all_zero(const RealVector& v) {
    for (double x : v)
        if (x != 0.0) return false;
    return true;
}

void validate_inputs(const RealChannel& ch, const RealVector& y, const SumisConfig& cfg,
                     const Constellation& c, const PriorInfo& prior) {
    const int n_t = static_cast<int>(ch.h.cols());
    if (ch.h.rows() < ch.h.cols()) throw ShapeError("sumis: channel must satisfy Nr >= Nt");
    if (ch.n0 <= 0.0) throw std::invalid_argument("sumis: n0 must be positive");
    if (y.size() != ch.h.rows()) throw ShapeError("sumis: y length mismatch");
    if (cfg.ns < 1 || cfg.ns > n_t) throw std::invalid_argument("sumis: ns must be in 1..nT");
    if (prior.n_t() != n_t || prior.m() != c.size()) throw ShapeError("sumis: prior shape mismatch");
    require_enumeration_guard(cfg.ns, c.size());
}

}  // namespace

Partition select_partition(const RealMatrix& gram, int anchor, int ns) {
    const int n_t = static_cast<int>(gram.cols());
    if (gram.rows() != gram.cols()) throw ShapeError("select_partition: gram must be square");
    if (anchor < 0 || anchor >= n_t) throw std::invalid_argument("select_partition: bad anchor");
    if (ns < 1 || ns > n_t) throw std::invalid_argument("select_partition: bad ns");

    std::vector<int> others;
    for (int l = 0; l < n_t; ++l)
        if (l != anchor) others.push_back(l);
    std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
        const double sa = std::fabs(gram(anchor, a)), sb = std::fabs(gram(anchor, b));
        if (sa != sb) return sa > sb;
        return a < b;
    });

    Partition p;
    p.anchor = anchor;
    p.bar_cols.push_back(anchor);
    for (int i = 0; i < ns - 1; ++i) p.bar_cols.push_back(others[static_cast<std::size_t>(i)]);
    std::vector<bool> in_bar(n_t, false);
    for (int l : p.bar_cols) in_bar[static_cast<std::size_t>(l)] = true;
    for (int l = 0; l < n_t; ++l)
        if (!in_bar[static_cast<std::size_t>(l)]) p.tilde_cols.push_back(l);
    return p;
}

SoftSymbolStats stage1(const RealChannel& ch, const RealVector& y, const SumisConfig& cfg,
                       const Constellation& c, const PriorInfo& prior) {
    validate_inputs(ch, y, cfg, c, prior);
    const int n_t = static_cast<int>(ch.h.cols());
    const int m = c.size();
    const RealVector mu = prior_means(prior, c);
    const RealVector psi = prior_variances(prior, c);
    const RealMatrix g = gram(ch.h);

    SoftSymbolStats stats;
    stats.pmf = RealMatrix(n_t, m);
    stats.mean.assign(n_t, 0.0);
    stats.variance.assign(n_t, 0.0);

    for (int anchor = 0; anchor < n_t; ++anchor) {
        const Partition part = select_partition(g, anchor, cfg.ns);
        const RealMatrix h_bar = pick_columns(ch.h, part.bar_cols);

        // y_eff = y - H̃ μ̃ ; Q = H̃ Ψ̃ H̃ᵀ + (N0/2) I
        RealVector y_eff = y;
        RealMatrix q(ch.h.rows(), ch.h.rows());
        for (std::size_t i = 0; i < q.rows(); ++i) q(i, i) = ch.n0 / 2.0;
        for (int l : part.tilde_cols) {
            for (std::size_t i = 0; i < y_eff.size(); ++i) y_eff[i] -= ch.h(i, l) * mu[l];
            for (std::size_t i = 0; i < q.rows(); ++i)
                for (std::size_t j = 0; j < q.cols(); ++j) q(i, j) += psi[l] * ch.h(i, l) * ch.h(j, l);
            ops::elem(2 * y_eff.size() + 3 * q.rows() * q.cols());
        }
        const RealMatrix q_inv = spd_inverse(q);

        std::vector<double> acc(m, kNegInf);
        naive_sweep(h_bar, y_eff, q_inv, prior, part.bar_cols, c,
                    [&](const std::vector<int>& digits, double t) {
                        acc[digits[0]] = jacobian_log_sum(acc[digits[0]], t);
                    });
        finish_symbol(acc, c, stats, anchor);
    }
    return stats;
}

LlrVector stats_to_llrs(const SoftSymbolStats& stats, const Constellation& c, double llr_clip) {
    const int n_t = static_cast<int>(stats.pmf.rows());
    const int m = c.size();
    const int b = c.bits_per_symbol;
    LlrVector out(static_cast<std::size_t>(n_t) * b);
    for (int k = 0; k < n_t; ++k)
        for (int j = 0; j < b; ++j) {
            double a0 = kNegInf, a1 = kNegInf;
            for (int i = 0; i < m; ++i) {
                const double p = stats.pmf(k, i);
                const double lg = p > 0.0 ? std::log(p) : kNegInf;
                if (bit_of_label(c.labels[i], j, b))
                    a1 = jacobian_log_sum(a1, lg);
                else
                    a0 = jacobian_log_sum(a0, lg);
            }
            ops::transc(static_cast<std::uint64_t>(m));
            out[static_cast<std::size_t>(k) * b + j] = clip_llr(a1 - a0, llr_clip);
            ops::elem(1);
        }
    return out;
}

LlrVector stage2(const RealChannel& ch, const RealVector& y, const SoftSymbolStats& stats,
                 const SumisConfig& cfg, const Constellation& c, const PriorInfo& prior) {
    validate_inputs(ch, y, cfg, c, prior);
    const int n_t = static_cast<int>(ch.h.cols());
    const int b = c.bits_per_symbol;
    const RealMatrix g = gram(ch.h);

    RealVector mp, vp;
    purified_moments(stats, c, mp, vp);

    LlrVector out(static_cast<std::size_t>(n_t) * b);
    for (int anchor = 0; anchor < n_t; ++anchor) {
        const Partition part = select_partition(g, anchor, cfg.ns);
        const RealMatrix h_bar = pick_columns(ch.h, part.bar_cols);

        RealVector y_prime = y;
        RealMatrix q(ch.h.rows(), ch.h.rows());
        for (std::size_t i = 0; i < q.rows(); ++i) q(i, i) = ch.n0 / 2.0;
        for (int l : part.tilde_cols) {
            for (std::size_t i = 0; i < y_prime.size(); ++i) y_prime[i] -= ch.h(i, l) * mp[l];
            for (std::size_t i = 0; i < q.rows(); ++i)
                for (std::size_t j = 0; j < q.cols(); ++j) q(i, j) += vp[l] * ch.h(i, l) * ch.h(j, l);
            ops::elem(2 * y_prime.size() + 3 * q.rows() * q.cols());
        }
        const RealMatrix q_inv = spd_inverse(q);

        std::vector<double> a0(b, kNegInf), a1(b, kNegInf);
        naive_sweep(h_bar, y_prime, q_inv, prior, part.bar_cols, c,
                    [&](const std::vector<int>& digits, double t) {
                        const int label = c.labels[digits[0]];
                        for (int j = 0; j < b; ++j) {
                            double& acc = bit_of_label(label, j, b) ? a1[j] : a0[j];
                            acc = jacobian_log_sum(acc, t);
                        }
                    });
        for (int j = 0; j < b; ++j) {
            out[static_cast<std::size_t>(anchor) * b + j] = clip_llr(a1[j] - a0[j], cfg.llr_clip);
            ops::elem(1);
        }
    }
    return out;
}

SumisPrecomp precompute_y_independent(const RealChannel& ch, const RealVector& prior_variances,
                                      const SumisConfig& cfg) {
    if (ch.h.rows() < ch.h.cols()) throw ShapeError("precompute: channel must satisfy Nr >= Nt");
    const int n_t = static_cast<int>(ch.h.cols());
    if (prior_variances.size() != static_cast<std::size_t>(n_t))
        throw ShapeError("precompute: prior variance length mismatch");
    for (double v : prior_variances)
        if (v <= 0.0)
            throw NotPositiveDefinite("precompute: prior variances must be positive "
                                      "(zero-variance symbols are removed beforehand)");

    ops::PhaseGuard guard(ops::Phase::y_independent);

    SumisPrecomp pre;
    pre.h = ch.h;
    pre.n0 = ch.n0;
    pre.ns = cfg.ns;
    pre.psi = prior_variances;
    pre.gram = gram(ch.h);

    // T = (N0/2)I + Ψ^½ G Ψ^½, then A = ((N0/2)I + G Ψ)⁻¹ via the LDL of T:
    // A = Ψ^(-½) L⁻ᵀ D⁻¹ L⁻¹ Ψ^½.
    RealVector psi_half(n_t);
    for (int i = 0; i < n_t; ++i) psi_half[i] = std::sqrt(pre.psi[i]);
    ops::transc(static_cast<std::uint64_t>(n_t));

    RealMatrix t(n_t, n_t);
    for (int i = 0; i < n_t; ++i)
        for (int j = i; j < n_t; ++j) {
            const double v = psi_half[i] * pre.gram(i, j) * psi_half[j];
            t(i, j) = v;
            t(j, i) = v;
        }
    for (int i = 0; i < n_t; ++i) t(i, i) += ch.n0 / 2.0;
    ops::elem(static_cast<std::uint64_t>(n_t) * (n_t + 1) + n_t);

    const LdlFactors f = ldl_decompose(t);
    const RealMatrix linv = invert_unit_lower(f.unit_lower);

    // W = D^(-½) L⁻¹, S0 = WᵀW = L⁻ᵀD⁻¹L⁻¹ (symmetric), A = Ψ^(-½) S0 Ψ^½.
    RealMatrix w = linv;
    for (int i = 0; i < n_t; ++i) {
        const double s = 1.0 / std::sqrt(f.diag[i]);
        for (int j = 0; j <= i; ++j) w(i, j) *= s;
    }
    ops::elem(static_cast<std::uint64_t>(n_t) * (n_t + 3) / 2);
    ops::transc(static_cast<std::uint64_t>(n_t));
    RealMatrix s0(n_t, n_t);
    std::uint64_t cnt = 0;
    for (int i = 0; i < n_t; ++i)
        for (int j = i; j < n_t; ++j) {
            double s = 0.0;
            for (int k = j; k < n_t; ++k) s += w(k, i) * w(k, j);
            s0(i, j) = s;
            s0(j, i) = s;
            cnt += 2 * static_cast<std::uint64_t>(n_t - j);
        }
    ops::elem(cnt);
    pre.a = RealMatrix(n_t, n_t);
    for (int i = 0; i < n_t; ++i)
        for (int j = 0; j < n_t; ++j) pre.a(i, j) = s0(i, j) * psi_half[j] / psi_half[i];
    ops::elem(static_cast<std::uint64_t>(2 * n_t) * n_t);

    // Per-partition kernels: B = P̄ᵀ(A G)P̄, innerInv = B⁻¹,
    // G_k = H̄ᵀQ⁻¹H̄ = (B⁻¹ − Ψ̄)⁻¹.
    const int ns = cfg.ns;
    pre.partitions.reserve(n_t);
    pre.inner_inv.reserve(n_t);
    pre.g_bar.reserve(n_t);
    for (int anchor = 0; anchor < n_t; ++anchor) {
        Partition part = select_partition(pre.gram, anchor, ns);
        RealMatrix b(ns, ns);
        cnt = 0;
        for (int i = 0; i < ns; ++i)
            for (int j = i; j < ns; ++j) {
                double s = 0.0;
                const int ri = part.bar_cols[static_cast<std::size_t>(i)];
                const int cj = part.bar_cols[static_cast<std::size_t>(j)];
                for (int k = 0; k < n_t; ++k) s += pre.a(ri, k) * pre.gram(k, cj);
                b(i, j) = s;
                b(j, i) = s;
                cnt += 2 * static_cast<std::uint64_t>(n_t);
            }
        ops::elem(cnt);
        RealMatrix inner = inverse_sym(b);
        RealMatrix core = inner;
        for (int i = 0; i < ns; ++i) core(i, i) -= pre.psi[static_cast<std::size_t>(part.bar_cols[i])];
        ops::elem(static_cast<std::uint64_t>(ns));
        pre.g_bar.push_back(inverse_sym(symmetrized(core)));
        pre.inner_inv.push_back(std::move(inner));
        pre.partitions.push_back(std::move(part));
    }
    return pre;
}

LlrVector apply_y_dependent(const SumisPrecomp& pre, const RealVector& y, const SumisConfig& cfg,
                            const Constellation& c, const PriorInfo& prior,
                            SoftSymbolStats* stats_out) {
    ops::PhaseGuard guard(ops::Phase::y_dependent);
    const int n_t = static_cast<int>(pre.h.cols());
    const int m = c.size();
    const int b = c.bits_per_symbol;
    const int ns = cfg.ns;
    if (pre.ns != ns) throw std::invalid_argument("apply_y_dependent: ns differs from precompute");
    if (y.size() != pre.h.rows()) throw ShapeError("apply_y_dependent: y length mismatch");
    if (prior.n_t() != n_t || prior.m() != m) throw ShapeError("apply_y_dependent: prior shape mismatch");

    const RealVector mu = prior_means(prior, c);
    const RealVector hty = matvec_transposed(pre.h, y);

    RealVector w1 = hty;
    if (!all_zero(mu)) w1 = vec_sub(hty, matvec(pre.gram, mu));
    const RealVector u1 = matvec(pre.a, w1);

    SoftSymbolStats stats;
    stats.pmf = RealMatrix(n_t, m);
    stats.mean.assign(n_t, 0.0);
    stats.variance.assign(n_t, 0.0);

    for (int anchor = 0; anchor < n_t; ++anchor) {
        const Partition& part = pre.partitions[static_cast<std::size_t>(anchor)];
        RealVector ubar(ns), mubar(ns);
        for (int i = 0; i < ns; ++i) {
            ubar[i] = u1[static_cast<std::size_t>(part.bar_cols[i])];
            mubar[i] = mu[static_cast<std::size_t>(part.bar_cols[i])];
        }
        RealVector center = matvec(pre.inner_inv[static_cast<std::size_t>(anchor)], ubar);
        for (int i = 0; i < ns; ++i) center[i] += mubar[i];
        ops::elem(static_cast<std::uint64_t>(ns));

        std::vector<double> acc(m, kNegInf);
        quadratic_sweep(pre.g_bar[static_cast<std::size_t>(anchor)], center, prior, part.bar_cols, c,
                        [&](const std::vector<int>& digits, double t) {
                            acc[digits[0]] = jacobian_log_sum(acc[digits[0]], t);
                        });
        finish_symbol(acc, c, stats, anchor);
    }

    if (stats_out) *stats_out = stats;
    if (!cfg.stage2_enabled) return stats_to_llrs(stats, c, cfg.llr_clip);

    // Stage II: same kernel structure with the posterior moments in place of
    // the priors. Everything here depends on y, including the LDL.
    RealVector mp, vp;
    purified_moments(stats, c, mp, vp);

    RealVector phi_half(n_t);
    for (int i = 0; i < n_t; ++i) phi_half[i] = std::sqrt(vp[i]);
    ops::transc(static_cast<std::uint64_t>(n_t));

    RealMatrix t(n_t, n_t);
    for (int i = 0; i < n_t; ++i)
        for (int j = i; j < n_t; ++j) {
            const double v = phi_half[i] * pre.gram(i, j) * phi_half[j];
            t(i, j) = v;
            t(j, i) = v;
        }
    for (int i = 0; i < n_t; ++i) t(i, i) += pre.n0 / 2.0;
    ops::elem(static_cast<std::uint64_t>(n_t) * (n_t + 1) + n_t);

    const LdlFactors f = ldl_decompose(t);
    const RealMatrix linv = invert_unit_lower(f.unit_lower);

    // W = D^(-½) L⁻¹ Φ^½ ⇒ S = WᵀW = Φ^½L⁻ᵀD⁻¹L⁻¹Φ^½ and A' = Φ⁻¹S, which
    // is never materialized: u2 = Φ⁻¹(S w2) and the B' entries divide by Φ
    // on the fly.
    RealMatrix w = linv;
    for (int i = 0; i < n_t; ++i) {
        const double s = 1.0 / std::sqrt(f.diag[i]);
        for (int j = 0; j <= i; ++j) w(i, j) *= s * phi_half[j];
    }
    ops::elem(static_cast<std::uint64_t>(n_t) * (n_t + 3));
    ops::transc(static_cast<std::uint64_t>(n_t));
    RealMatrix s_mat(n_t, n_t);
    std::uint64_t cnt = 0;
    for (int i = 0; i < n_t; ++i)
        for (int j = i; j < n_t; ++j) {
            double s = 0.0;
            for (int k = j; k < n_t; ++k) s += w(k, i) * w(k, j);
            s_mat(i, j) = s;
            s_mat(j, i) = s;
            cnt += 2 * static_cast<std::uint64_t>(n_t - j);
        }
    ops::elem(cnt);

    const RealVector w2 = vec_sub(hty, matvec(pre.gram, mp));
    RealVector u2 = matvec(s_mat, w2);
    for (int i = 0; i < n_t; ++i) u2[i] /= vp[i];
    ops::elem(static_cast<std::uint64_t>(n_t));

    LlrVector out(static_cast<std::size_t>(n_t) * b);
    for (int anchor = 0; anchor < n_t; ++anchor) {
        const Partition& part = pre.partitions[static_cast<std::size_t>(anchor)];

        // A'G is symmetric, so only the upper triangle of the ns x ns block
        // is evaluated; mirroring doubles as the symmetrization.
        RealMatrix bp(ns, ns);
        cnt = 0;
        for (int i = 0; i < ns; ++i) {
            const int ri = part.bar_cols[static_cast<std::size_t>(i)];
            for (int j = i; j < ns; ++j) {
                const int cj = part.bar_cols[static_cast<std::size_t>(j)];
                double s = 0.0;
                for (int k = 0; k < n_t; ++k) s += s_mat(ri, k) * pre.gram(k, cj);
                bp(i, j) = s / vp[ri];
                bp(j, i) = bp(i, j);
                cnt += 2 * static_cast<std::uint64_t>(n_t) + 1;
            }
        }
        ops::elem(cnt);
        const RealMatrix inner = inverse_sym(bp);
        RealMatrix core = inner;
        for (int i = 0; i < ns; ++i) core(i, i) -= vp[static_cast<std::size_t>(part.bar_cols[i])];
        ops::elem(static_cast<std::uint64_t>(ns));
        const RealMatrix gk = inverse_sym(symmetrized(core));

        RealVector ubar(ns);
        for (int i = 0; i < ns; ++i) ubar[i] = u2[static_cast<std::size_t>(part.bar_cols[i])];
        RealVector center = matvec(inner, ubar);
        for (int i = 0; i < ns; ++i) center[i] += mp[static_cast<std::size_t>(part.bar_cols[i])];
        ops::elem(static_cast<std::uint64_t>(ns));

        std::vector<double> a0(b, kNegInf), a1(b, kNegInf);
        quadratic_sweep(gk, center, prior, part.bar_cols, c,
                        [&](const std::vector<int>& digits, double t_val) {
                            const int label = c.labels[digits[0]];
                            for (int j = 0; j < b; ++j) {
                                double& acc = bit_of_label(label, j, b) ? a1[j] : a0[j];
                                acc = jacobian_log_sum(acc, t_val);
                            }
                        });
        for (int j = 0; j < b; ++j) {
            out[static_cast<std::size_t>(anchor) * b + j] = clip_llr(a1[j] - a0[j], cfg.llr_clip);
            ops::elem(1);
        }
    }
    return out;
}

namespace {

LlrVector detect_core(const RealChannel& ch, const RealVector& y, const SumisConfig& cfg,
                      const Constellation& c, const PriorInfo& prior) {
    if (cfg.optimized_path) {
        const SumisPrecomp pre = precompute_y_independent(ch, prior_variances(prior, c), cfg);
        return apply_y_dependent(pre, y, cfg, c, prior);
    }
    const SoftSymbolStats stats = stage1(ch, y, cfg, c, prior);
    return cfg.stage2_enabled ? stage2(ch, y, stats, cfg, c, prior)
                              : stats_to_llrs(stats, c, cfg.llr_clip);
}

}  // namespace

LlrVector sumis_detect(const RealChannel& ch, const RealVector& y, const SumisConfig& cfg,
                       const Constellation& c, const PriorInfo& prior) {
    validate_inputs(ch, y, cfg, c, prior);
    const int n_t = static_cast<int>(ch.h.cols());
    const int m = c.size();
    const int b = c.bits_per_symbol;

    // Symbols whose prior pmf is a point mass carry no randomness: subtract
    // their known contribution from y and detect the reduced system.
    const RealVector psi = prior_variances(prior, c);
    std::vector<int> keep, fixed;
    for (int k = 0; k < n_t; ++k)
        (psi[k] == 0.0 ? fixed : keep).push_back(k);

    if (fixed.empty()) return detect_core(ch, y, cfg, c, prior);

    LlrVector out(static_cast<std::size_t>(n_t) * b, 0.0);
    RealVector y_red = y;
    for (int k : fixed) {
        int pt = 0;
        for (int i = 1; i < m; ++i)
            if (prior.pmf(k, i) > prior.pmf(k, pt)) pt = i;
        for (std::size_t i = 0; i < y_red.size(); ++i) y_red[i] -= ch.h(i, k) * c.points[pt];
        const int label = c.labels[pt];
        for (int j = 0; j < b; ++j)
            out[static_cast<std::size_t>(k) * b + j] =
                bit_of_label(label, j, b) ? cfg.llr_clip : -cfg.llr_clip;
    }
    if (keep.empty()) return out;

    RealChannel ch_red{pick_columns(ch.h, keep), ch.n0};
    PriorInfo prior_red;
    prior_red.pmf = RealMatrix(keep.size(), m);
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (int j = 0; j < m; ++j) prior_red.pmf(i, j) = prior.pmf(static_cast<std::size_t>(keep[i]), j);
    SumisConfig cfg_red = cfg;
    cfg_red.ns = std::min(cfg.ns, static_cast<int>(keep.size()));

    const LlrVector sub = detect_core(ch_red, y_red, cfg_red, c, prior_red);
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (int j = 0; j < b; ++j)
            out[static_cast<std::size_t>(keep[i]) * b + j] = sub[i * b + static_cast<std::size_t>(j)];
    return out;
}

double icsi_effective_noise(const ChannelEstimate& est, double n0, const SumisConfig& cfg,
                            const Constellation& c, const PriorInfo& prior) {
    if (cfg.icsi_mode == IcsiMode::none) return n0;
    const int n_t = static_cast<int>(est.h_hat.cols());
    if (cfg.icsi_mode == IcsiMode::constant_modulus) return n_t * est.delta2 + n0;

    // General: eta = average over the nT partitions of E‖s̃‖² under priors.
    const RealVector mu = prior_means(prior, c);
    const RealVector psi = prior_variances(prior, c);
    RealVector energy(n_t);
    double total = 0.0;
    for (int k = 0; k < n_t; ++k) {
        energy[k] = mu[k] * mu[k] + psi[k];
        total += energy[k];
    }
    const RealMatrix g = gram(est.h_hat);
    double eta = 0.0;
    for (int anchor = 0; anchor < n_t; ++anchor) {
        const Partition part = select_partition(g, anchor, cfg.ns);
        double bar_energy = 0.0;
        for (int l : part.bar_cols) bar_energy += energy[static_cast<std::size_t>(l)];
        eta += total - bar_energy;
    }
    eta /= n_t;
    return (eta + cfg.ns) * est.delta2 + n0;
}

LlrVector soft_mmse(const RealChannel& ch, const RealVector& y, const Constellation& c,
                    const PriorInfo& prior, double llr_clip) {
    SumisConfig cfg;
    cfg.ns = 1;
    cfg.stage2_enabled = false;
    cfg.optimized_path = false;
    cfg.llr_clip = llr_clip;
    return sumis_detect(ch, y, cfg, c, prior);
}

OpCount measured_sumis_count(int nt_real, int nr_real, int ns, int m, bool optimized,
                             std::uint64_t seed) {
    if (nt_real < 1 || nr_real < nt_real) throw ShapeError("measured_sumis_count: need 1 <= nt <= nr");
    Rng rng(seed);
    RealMatrix h(nr_real, nt_real);
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) = rng.gaussian();
    RealChannel ch{std::move(h), 1.0};
    const Constellation c = make_constellation(m);
    const PriorInfo prior = PriorInfo::uniform(nt_real, m);
    RealVector y(nr_real);
    for (double& v : y) v = rng.gaussian();

    SumisConfig cfg;
    cfg.ns = ns;
    cfg.stage2_enabled = true;
    cfg.optimized_path = optimized;

    ops::Counter& ctr = ops::counter();
    const bool was_enabled = ctr.enabled;
    const ops::Tally saved[2] = {ctr.phases[0], ctr.phases[1]};
    const ops::Phase saved_phase = ctr.phase;
    ctr.enabled = true;
    ctr.reset();

    if (optimized) {
        const SumisPrecomp pre = precompute_y_independent(ch, prior_variances(prior, c), cfg);
        (void)apply_y_dependent(pre, y, cfg, c, prior);
    } else {
        ops::PhaseGuard guard(ops::Phase::y_dependent);
        const SoftSymbolStats stats = stage1(ch, y, cfg, c, prior);
        (void)stage2(ch, y, stats, cfg, c, prior);
    }

    OpCount out;
    out.method = optimized ? "sumis" : "sumisNaive";
    out.nr = nr_real;
    out.nt = nt_real;
    out.ns = ns;
    out.m = m;
    out.y_independent = ctr.phases[0].elementary;
    out.y_dependent = ctr.phases[1].elementary;
    out.transcendental_y_independent = ctr.phases[0].transcendental;
    out.transcendental_y_dependent = ctr.phases[1].transcendental;

    ctr.enabled = was_enabled;
    ctr.phases[0] = saved[0];
    ctr.phases[1] = saved[1];
    ctr.phase = saved_phase;
    return out;
}

SumisDetector::SumisDetector(const RealChannel& ch, const SumisConfig& cfg, const Constellation& c)
    : ch_(ch), cfg_(cfg), c_(c), uniform_(PriorInfo::uniform(static_cast<int>(ch.h.cols()), c.size())) {
    if (cfg_.optimized_path)
        pre_ = precompute_y_independent(ch_, prior_variances(uniform_, c_), cfg_);
}

LlrVector SumisDetector::detect(const RealVector& y) const {
    if (pre_) return apply_y_dependent(*pre_, y, cfg_, c_, uniform_);
    return sumis_detect(ch_, y, cfg_, c_, uniform_);
}

LlrVector SumisDetector::detect(const RealVector& y, const PriorInfo& prior) const {
    return sumis_detect(ch_, y, cfg_, c_, prior);
}

}  // namespace sumis
