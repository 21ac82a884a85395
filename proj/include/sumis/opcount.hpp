#ifndef SUMIS_OPCOUNT_HPP
#define SUMIS_OPCOUNT_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sumis::ops {

// Elementary-operation accounting. Additions, subtractions, multiplications
// and divisions each count as one elementary operation; transcendental calls
// (exp, log, tanh, sqrt, atanh) are tallied separately. Counting is split
// into a y-independent phase (per channel matrix) and a y-dependent phase
// (per received vector).
enum class Phase { y_independent = 0, y_dependent = 1 };

struct Tally {
    std::uint64_t elementary = 0;
    std::uint64_t transcendental = 0;
};

class Counter {
public:
    bool enabled = false;
    Phase phase = Phase::y_dependent;
    Tally phases[2];

    void elem(std::uint64_t n) {
        if (enabled) phases[static_cast<int>(phase)].elementary += n;
    }
    void transc(std::uint64_t n) {
        if (enabled) phases[static_cast<int>(phase)].transcendental += n;
    }
    void reset() {
        phases[0] = Tally{};
        phases[1] = Tally{};
    }
};

// Per-thread accumulator; workers merge their counts after a run.
Counter& counter();

inline void elem(std::uint64_t n) { counter().elem(n); }
inline void transc(std::uint64_t n) { counter().transc(n); }

class PhaseGuard {
public:
    explicit PhaseGuard(Phase p) : prev_(counter().phase) { counter().phase = p; }
    ~PhaseGuard() { counter().phase = prev_; }
    PhaseGuard(const PhaseGuard&) = delete;
    PhaseGuard& operator=(const PhaseGuard&) = delete;

private:
    Phase prev_;
};

class EnableGuard {
public:
    EnableGuard() : prev_(counter().enabled) { counter().enabled = true; }
    ~EnableGuard() { counter().enabled = prev_; }
    EnableGuard(const EnableGuard&) = delete;
    EnableGuard& operator=(const EnableGuard&) = delete;

private:
    bool prev_;
};

}  // namespace sumis::ops

namespace sumis {

struct OpCount {
    std::uint64_t y_independent = 0;
    std::uint64_t y_dependent = 0;
    std::uint64_t transcendental_y_independent = 0;
    std::uint64_t transcendental_y_dependent = 0;
    std::string method;
    int nr = 0, nt = 0, ns = 0, m = 0;
};

struct UnknownMethod : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Closed-form elementary-operation figures per detection method:
//   sumis:    (Nr*Nt^2 + Nt^3 + 2*ns^2*Nt^2,  Nt^3 + 2*Nr*Nt + (2*ns^2+6)*Nt^2)
//   pm:       (Nr*Nt^2 + Nt^3,                (2*Nt^3 + 4*Nt^2) * M^ns)
//   softMmse: (Nr*Nt^2 + Nt^3,                2*Nt*(Nr+Nt))
//   maxLog = exactLlr: (3*Nt*M^Nt, Nt*M^Nt)
OpCount table_formula(const std::string& method, int nr, int nt, int ns, int m);

}  // namespace sumis

#endif
