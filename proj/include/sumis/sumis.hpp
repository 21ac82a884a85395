#ifndef SUMIS_SUMIS_HPP
#define SUMIS_SUMIS_HPP

#include <optional>
#include <vector>

#include "sumis/detect_ref.hpp"
#include "sumis/linalg.hpp"
#include "sumis/matrix.hpp"
#include "sumis/model.hpp"
#include "sumis/opcount.hpp"

namespace sumis {

// Column split for one anchor symbol: barCols (size ns, anchor first) is
// marginalized exactly, tildeCols is treated as gaussian interference.
struct Partition {
    int anchor = 0;
    std::vector<int> bar_cols;
    std::vector<int> tilde_cols;
};

// barCols = anchor plus the ns-1 strongest couplings |gram[anchor, l]|,
// ties broken toward the lower index.
Partition select_partition(const RealMatrix& gram, int anchor, int ns);

struct SoftSymbolStats {
    RealMatrix pmf;       // one row per symbol, M columns, rows sum to 1
    RealVector mean;      // E[s_k | y]
    RealVector variance;  // Var[s_k | y]
};

enum class IcsiMode { none, constant_modulus, general };

struct SumisConfig {
    int ns = 1;
    bool stage2_enabled = true;
    bool optimized_path = false;
    IcsiMode icsi_mode = IcsiMode::none;
    double llr_clip = kDefaultLlrClip;
};

// Everything that depends on the channel and prior variances but not on y:
// gram, the LDL route to A = ((N0/2)I + G Psi)^-1, and per-partition
// ns x ns kernels.
struct SumisPrecomp {
    RealMatrix h;
    double n0 = 1.0;
    RealMatrix gram;          // HᵀH
    RealMatrix a;             // ((N0/2)I + gram·Ψ)⁻¹, assembled via LDL
    RealVector psi;           // prior variances
    std::vector<Partition> partitions;
    std::vector<RealMatrix> inner_inv;  // (P̄ᵀ A G P̄)⁻¹ per anchor
    std::vector<RealMatrix> g_bar;      // H̄ᵀQ⁻¹H̄ = (innerInv − Ψ̄)⁻¹⁻¹… per anchor
    int ns = 1;
};

SumisPrecomp precompute_y_independent(const RealChannel& ch, const RealVector& prior_variances,
                                      const SumisConfig& cfg);

// Stage I: per-symbol posterior pmf under the gaussian interference
// approximation; naive (explicit Q inversion) reference path.
SoftSymbolStats stage1(const RealChannel& ch, const RealVector& y, const SumisConfig& cfg,
                       const Constellation& c, const PriorInfo& prior);

// Per-bit LLRs read straight off stage-I pmfs (stage II disabled).
LlrVector stats_to_llrs(const SoftSymbolStats& stats, const Constellation& c, double llr_clip);

// Stage II: purification (subtract conditional means, absorb conditional
// variances into Q') and final subspace LLRs; naive reference path.
LlrVector stage2(const RealChannel& ch, const RealVector& y, const SoftSymbolStats& stats,
                 const SumisConfig& cfg, const Constellation& c, const PriorInfo& prior);

// Optimized path: both stages via the precomputed kernels; returns the same
// values as the naive path up to floating-point noise.
LlrVector apply_y_dependent(const SumisPrecomp& pre, const RealVector& y, const SumisConfig& cfg,
                            const Constellation& c, const PriorInfo& prior,
                            SoftSymbolStats* stats_out = nullptr);

// Full detector: zero-variance prior columns are removed from the
// stochastic system first (their contribution is subtracted from y and the
// fixed bits emit ±llrClip), then stage I (+ stage II) on the rest.
LlrVector sumis_detect(const RealChannel& ch, const RealVector& y, const SumisConfig& cfg,
                       const Constellation& c, const PriorInfo& prior);

// Effective noise level for matched detection under channel-estimation
// error variance delta2 (per complex entry).
double icsi_effective_noise(const ChannelEstimate& est, double n0, const SumisConfig& cfg,
                            const Constellation& c, const PriorInfo& prior);

// Instrumented run on one random instance: counts elementary operations of
// the y-independent and y-dependent phases (naive runs count everything as
// y-dependent work per vector).
OpCount measured_sumis_count(int nt_real, int nr_real, int ns, int m, bool optimized,
                             std::uint64_t seed);

// Per-channel cache: builds the y-independent precompute once (uniform
// priors) and reuses it for every vector sharing the channel.
class SumisDetector {
public:
    SumisDetector(const RealChannel& ch, const SumisConfig& cfg, const Constellation& c);

    LlrVector detect(const RealVector& y) const;                          // uniform priors
    LlrVector detect(const RealVector& y, const PriorInfo& prior) const;  // soft input

private:
    RealChannel ch_;
    SumisConfig cfg_;
    Constellation c_;
    PriorInfo uniform_;
    std::optional<SumisPrecomp> pre_;  // built iff optimized path
};

}  // namespace sumis

#endif
