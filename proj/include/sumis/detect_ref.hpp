#ifndef SUMIS_DETECT_REF_HPP
#define SUMIS_DETECT_REF_HPP

#include <stdexcept>
#include <vector>

#include "sumis/gray.hpp"
#include "sumis/matrix.hpp"
#include "sumis/model.hpp"

namespace sumis {

struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One value per transmitted bit; positive means bit 1 (the + side).
using LlrVector = RealVector;

constexpr double kDefaultLlrClip = 50.0;

// One pmf row (over the M constellation points) per transmit symbol.
struct PriorInfo {
    RealMatrix pmf;

    static PriorInfo uniform(int n_t, int m);
    int n_t() const { return static_cast<int>(pmf.rows()); }
    int m() const { return static_cast<int>(pmf.cols()); }
};

RealVector prior_means(const PriorInfo& prior, const Constellation& c);
RealVector prior_variances(const PriorInfo& prior, const Constellation& c);

// Exact per-bit LLRs by a Gray-ordered full sweep with differential
// residual updates and Jacobian-log accumulation.
LlrVector exact_llr(const RealChannel& ch, const RealVector& y, const Constellation& c,
                    const PriorInfo& prior, double llr_clip = kDefaultLlrClip);

// Max-log LLRs (uniform priors): per-bit minimum-metric differences.
LlrVector max_log(const RealChannel& ch, const RealVector& y, const Constellation& c,
                  double llr_clip = kDefaultLlrClip);

// Linear MMSE with gaussian soft output; defined as SUMIS stage I with
// ns = 1 and stage II disabled (implemented in the sumis module).
LlrVector soft_mmse(const RealChannel& ch, const RealVector& y, const Constellation& c,
                    const PriorInfo& prior, double llr_clip = kDefaultLlrClip);

// Zero-forcing decision feedback: sorted QR, then layered back-substitution
// quantizing each layer to the nearest constellation point. Returns symbol
// amplitudes in the original column order.
RealVector zf_df(const RealMatrix& h_tilde, const RealVector& residual, const Constellation& c);

// Partial marginalization: exact sum over an ns-symbol subspace per bit,
// ZF-DF hard solutions for the rest. Uniform priors only.
LlrVector pm_detect(const RealChannel& ch, const RealVector& y, int ns, const Constellation& c,
                    double llr_clip = kDefaultLlrClip);

double clip_llr(double v, double llr_clip);

}  // namespace sumis

#endif
