#ifndef SUMIS_SIM_HPP
#define SUMIS_SIM_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "sumis/coding.hpp"
#include "sumis/sumis.hpp"

namespace sumis {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DetectorKind { exact_llr, max_log, soft_mmse, sumis, pm };
enum class FadingMode { slow, fast };
enum class IcsiHandling { none, matched, mismatched };

struct SimConfig {
    DetectorKind detector = DetectorKind::sumis;
    SumisConfig sumis;  // ns / stage2 / optimized / llr_clip; ns also feeds pm

    int m = 2;       // constellation order
    int nt_c = 3;    // complex transmit antennas
    int nr_c = 3;    // complex receive antennas

    std::string alist_path;  // empty: generate the regular fixture below
    int code_n = 960;
    int code_dv = 3;
    int code_dc = 6;
    std::uint64_t code_seed = 1;

    FadingMode fading = FadingMode::slow;
    int fast_blocks = 1;

    std::vector<double> ebn0_db;
    int target_frame_errors = 100;
    long max_frames = 1000000;

    int iterations = 0;  // extra detect/decode loops; N loops = N+1 decoder runs

    IcsiHandling icsi = IcsiHandling::none;
    double icsi_alpha = 0.0;  // delta^2 = alpha * N0

    std::uint64_t seed = 1;
    std::uint64_t interleaver_seed = 2;
    bool count_ops = false;
    int workers = 1;  // chunking hint only; never changes results
};

SimConfig parse_config(std::istream& in);
SimConfig parse_config_file(const std::string& path);

struct PointResult {
    double ebn0_db = 0.0;
    long frames = 0;
    long frame_errors = 0;
    long long bit_errors = 0;
    double fer = 0.0;
    double ber = 0.0;
    std::uint64_t ops_y_indep = 0;
    std::uint64_t ops_y_dep = 0;
    double seconds = 0.0;
};

struct SimResult {
    std::vector<PointResult> points;
};

struct FrameOutcome {
    bool frame_error = false;
    long long bit_errors = 0;
    int decoder_runs = 0;
};

class Simulator {
public:
    explicit Simulator(const SimConfig& cfg);

    const CodeSpec& code() const { return code_; }
    const SimConfig& config() const { return cfg_; }
    int bits_per_use() const { return bits_per_use_; }
    int uses_per_frame() const { return uses_; }

    FrameOutcome run_frame(double ebn0_db, long frame_index) const;
    PointResult run_point(double ebn0_db) const;
    SimResult run_sweep() const;

private:
    SimConfig cfg_;
    Constellation c_;
    CodeSpec code_;
    std::vector<int> interleaver_;  // tx position i carries coded bit interleaver_[i]
    int bits_per_use_ = 0;
    int uses_ = 0;
};

PointResult run_point(const SimConfig& cfg, double ebn0_db);
SimResult run_sweep(const SimConfig& cfg);

void write_csv(const SimResult& result, std::ostream& out);
std::string metadata_json(const SimConfig& cfg);

}  // namespace sumis

#endif
