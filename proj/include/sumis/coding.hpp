#ifndef SUMIS_CODING_HPP
#define SUMIS_CODING_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "sumis/detect_ref.hpp"
#include "sumis/model.hpp"

namespace sumis {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InconsistentDegrees : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleParameters : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CodeSpec {
    int n = 0;  // codeword length
    int k = 0;  // information length (n - gf2 rank of the parity matrix)
    std::vector<std::vector<int>> check_vars;  // per check: variable indices
    std::vector<std::vector<int>> var_checks;  // per variable: check indices

    // Systematic encoder data from GF(2) elimination: info bits sit at the
    // free columns, each pivot column is an xor of some of them.
    std::vector<int> info_positions;            // size k
    std::vector<int> pivot_cols;                // size n - k
    std::vector<std::vector<int>> pivot_deps;   // per pivot: info indices xored

    double rate() const { return static_cast<double>(k) / n; }
};

CodeSpec load_alist(std::istream& in);
CodeSpec load_alist_file(const std::string& path);
void save_alist(const CodeSpec& code, std::ostream& out);

// Gallager (dv,dc)-regular construction with best-effort 4-cycle reduction.
CodeSpec generate_regular_ldpc(int n, int dv, int dc, Rng& rng);

std::vector<int> encode(const CodeSpec& code, const std::vector<int>& info);

bool parity_ok(const CodeSpec& code, const std::vector<int>& word);

struct DecodeResult {
    std::vector<int> hard_bits;
    LlrVector extrinsic;  // posterior minus input, same sign convention
    bool converged = false;
    int iterations = 0;
};

// Flooding sum-product decoder (tanh rule), early exit on parity
// satisfaction. LLR sign convention: positive means bit 1.
DecodeResult spa_decode(const LlrVector& llrs, const CodeSpec& code, int max_iters = 50);

}  // namespace sumis

#endif
