#include "sumis/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "sumis/opcount.hpp"

namespace sumis {

namespace {

int bits_for_order(int m) {
    switch (m) {
        case 2: return 1;
        case 4: return 2;
        case 8: return 3;
        default: throw ConfigError("constellation order must be 2, 4 or 8");
    }
}

std::string detector_name(DetectorKind d) {
    switch (d) {
        case DetectorKind::exact_llr: return "exactLlr";
        case DetectorKind::max_log: return "maxLog";
        case DetectorKind::soft_mmse: return "softMmse";
        case DetectorKind::sumis: return "sumis";
        case DetectorKind::pm: return "pm";
    }
    return "?";
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw ConfigError("config: bad boolean for '" + key + "': " + v);
}

}  // namespace

SimConfig parse_config(std::istream& in) {
    SimConfig cfg;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "detector") {
                if (val == "exactLlr") cfg.detector = DetectorKind::exact_llr;
                else if (val == "maxLog") cfg.detector = DetectorKind::max_log;
                else if (val == "softMmse") cfg.detector = DetectorKind::soft_mmse;
                else if (val == "sumis") cfg.detector = DetectorKind::sumis;
                else if (val == "pm") cfg.detector = DetectorKind::pm;
                else throw ConfigError("config: unknown detector '" + val + "'");
            } else if (key == "ns") cfg.sumis.ns = std::stoi(val);
            else if (key == "stage2") cfg.sumis.stage2_enabled = parse_bool(val, key);
            else if (key == "optimized") cfg.sumis.optimized_path = parse_bool(val, key);
            else if (key == "llr_clip") cfg.sumis.llr_clip = std::stod(val);
            else if (key == "m") cfg.m = std::stoi(val);
            else if (key == "nt") cfg.nt_c = std::stoi(val);
            else if (key == "nr") cfg.nr_c = std::stoi(val);
            else if (key == "alist") cfg.alist_path = val;
            else if (key == "code_n") cfg.code_n = std::stoi(val);
            else if (key == "code_dv") cfg.code_dv = std::stoi(val);
            else if (key == "code_dc") cfg.code_dc = std::stoi(val);
            else if (key == "code_seed") cfg.code_seed = std::stoull(val);
            else if (key == "fading") {
                if (val == "slow") cfg.fading = FadingMode::slow;
                else if (val == "fast") cfg.fading = FadingMode::fast;
                else throw ConfigError("config: fading must be slow or fast");
            } else if (key == "fast_blocks") cfg.fast_blocks = std::stoi(val);
            else if (key == "ebn0") {
                cfg.ebn0_db.clear();
                std::string v2 = val;
                std::replace(v2.begin(), v2.end(), ',', ' ');
                std::istringstream vs(v2);
                double x;
                while (vs >> x) cfg.ebn0_db.push_back(x);
            } else if (key == "target_frame_errors") cfg.target_frame_errors = std::stoi(val);
            else if (key == "max_frames") cfg.max_frames = std::stol(val);
            else if (key == "iterations") cfg.iterations = std::stoi(val);
            else if (key == "icsi") {
                if (val == "none") cfg.icsi = IcsiHandling::none;
                else if (val == "matched") cfg.icsi = IcsiHandling::matched;
                else if (val == "mismatched") cfg.icsi = IcsiHandling::mismatched;
                else throw ConfigError("config: icsi must be none, matched or mismatched");
            } else if (key == "icsi_alpha") cfg.icsi_alpha = std::stod(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "interleaver_seed") cfg.interleaver_seed = std::stoull(val);
            else if (key == "count_ops") cfg.count_ops = parse_bool(val, key);
            else if (key == "workers") cfg.workers = std::stoi(val);
            else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ConfigError("config line " + std::to_string(line_no) + ": bad value for '" + key + "'");
        } catch (const std::out_of_range&) {
            throw ConfigError("config line " + std::to_string(line_no) + ": value out of range for '" + key + "'");
        }
    }
    return cfg;
}

SimConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return parse_config(f);
}

Simulator::Simulator(const SimConfig& cfg) : cfg_(cfg) {
    if (cfg_.m != 2 && cfg_.m != 4 && cfg_.m != 8) throw ConfigError("constellation order must be 2, 4 or 8");
    if (cfg_.nt_c < 1 || cfg_.nr_c < cfg_.nt_c) throw ConfigError("need 1 <= nt <= nr (complex antennas)");
    if (cfg_.target_frame_errors < 1) throw ConfigError("target_frame_errors must be >= 1");
    if (cfg_.max_frames < 1) throw ConfigError("max_frames must be >= 1");
    if (cfg_.iterations < 0) throw ConfigError("iterations must be >= 0");
    if (cfg_.fast_blocks < 1) throw ConfigError("fast_blocks must be >= 1");
    if (cfg_.icsi_alpha < 0.0) throw ConfigError("icsi_alpha must be >= 0");
    if (cfg_.workers < 1) throw ConfigError("workers must be >= 1");

    c_ = make_constellation(cfg_.m);
    const int n_t_real = 2 * cfg_.nt_c;
    bits_per_use_ = n_t_real * c_.bits_per_symbol;

    if (cfg_.detector == DetectorKind::exact_llr || cfg_.detector == DetectorKind::max_log) {
        if (!enumeration_guard_ok(n_t_real, cfg_.m))
            throw ConfigError("exhaustive detector: nT*log2(M) exceeds the enumeration guard");
    }
    if (cfg_.sumis.ns < 1 || cfg_.sumis.ns > n_t_real) throw ConfigError("ns must be in 1..2*nt");
    if (cfg_.iterations > 0 && cfg_.detector != DetectorKind::sumis &&
        cfg_.detector != DetectorKind::soft_mmse)
        throw ConfigError("iterative detection needs a soft-input detector (sumis or softMmse)");

    try {
        if (!cfg_.alist_path.empty()) {
            code_ = load_alist_file(cfg_.alist_path);
        } else {
            Rng rng(cfg_.code_seed);
            code_ = generate_regular_ldpc(cfg_.code_n, cfg_.code_dv, cfg_.code_dc, rng);
        }
    } catch (const std::exception& e) {
        throw ConfigError(std::string("code construction failed: ") + e.what());
    }
    if (code_.n % bits_per_use_ != 0)
        throw ConfigError("codeword length must be a multiple of bits per channel use (" +
                          std::to_string(bits_per_use_) + ")");
    uses_ = code_.n / bits_per_use_;
    const int fb = cfg_.fading == FadingMode::fast ? cfg_.fast_blocks : 1;
    if (uses_ < fb) throw ConfigError("fewer channel uses per codeword than fading blocks");

    interleaver_.resize(code_.n);
    for (int i = 0; i < code_.n; ++i) interleaver_[i] = i;
    Rng irng(cfg_.interleaver_seed);
    for (int i = code_.n - 1; i > 0; --i) {
        const int j = static_cast<int>(irng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(interleaver_[i], interleaver_[j]);
    }
}

FrameOutcome Simulator::run_frame(double ebn0_db, long frame_index) const {
    const double n0 = ebn0_to_n0(ebn0_db, code_.rate(), c_);
    const int b = c_.bits_per_symbol;
    const int n_t_real = 2 * cfg_.nt_c;
    const int blocks = cfg_.fading == FadingMode::fast ? cfg_.fast_blocks : 1;
    const int per_block = uses_ / blocks;

    Rng rng = Rng::for_frame(cfg_.seed, static_cast<std::uint64_t>(frame_index));

    std::vector<int> info(code_.k);
    for (int& bit : info) bit = static_cast<int>(rng.next_u64() & 1);
    const std::vector<int> codeword = encode(code_, info);
    std::vector<int> tx(code_.n);
    for (int i = 0; i < code_.n; ++i) tx[i] = codeword[interleaver_[i]];

    // One true channel (and one detector view) per fading block.
    struct Block {
        RealMatrix h_true;
        RealChannel det_ch;
    };
    std::vector<Block> blks(blocks);
    for (int blk = 0; blk < blocks; ++blk) {
        const ComplexMatrix hc = sample_rayleigh(cfg_.nt_c, cfg_.nr_c, rng);
        RealMatrix h = complex_to_real(hc);
        Block bl;
        bl.h_true = h;
        if (cfg_.icsi == IcsiHandling::none || cfg_.icsi_alpha == 0.0) {
            bl.det_ch = RealChannel{std::move(h), n0};
        } else {
            const double delta2 = cfg_.icsi_alpha * n0;
            ChannelEstimate est = corrupt_channel(h, delta2, rng);
            double n0_eff = n0;
            if (cfg_.icsi == IcsiHandling::matched) {
                SumisConfig icfg = cfg_.sumis;
                icfg.icsi_mode = IcsiMode::constant_modulus;
                if (cfg_.m != 2) icfg.icsi_mode = IcsiMode::general;
                n0_eff = icsi_effective_noise(est, n0, icfg, c_,
                                              PriorInfo::uniform(n_t_real, cfg_.m));
            }
            bl.det_ch = RealChannel{std::move(est.h_hat), n0_eff};
        }
        blks[blk] = std::move(bl);
    }

    // Received vectors (true channel, true noise level).
    const double sigma = std::sqrt(n0 / 2.0);
    std::vector<RealVector> ys(uses_);
    std::vector<RealVector> s_vecs(uses_);
    for (int u = 0; u < uses_; ++u) {
        std::vector<int> use_bits(tx.begin() + static_cast<long>(u) * bits_per_use_,
                                  tx.begin() + static_cast<long>(u + 1) * bits_per_use_);
        s_vecs[u] = modulate(use_bits, c_, n_t_real);
        const int blk = std::min(u / per_block, blocks - 1);
        RealVector y = matvec(blks[blk].h_true, s_vecs[u]);
        for (double& v : y) v += sigma * rng.gaussian();
        ys[u] = std::move(y);
    }

    // Per-block detectors (cached y-independent work for the uniform case).
    std::vector<SumisDetector> sumis_dets;
    if (cfg_.detector == DetectorKind::sumis) {
        sumis_dets.reserve(blocks);
        for (const Block& bl : blks) sumis_dets.emplace_back(bl.det_ch, cfg_.sumis, c_);
    }
    const PriorInfo uniform = PriorInfo::uniform(n_t_real, cfg_.m);

    auto detect_use = [&](int u, const PriorInfo* prior) -> LlrVector {
        const int blk = std::min(u / per_block, blocks - 1);
        const RealChannel& dch = blks[blk].det_ch;
        switch (cfg_.detector) {
            case DetectorKind::exact_llr:
                return exact_llr(dch, ys[u], c_, prior ? *prior : uniform, cfg_.sumis.llr_clip);
            case DetectorKind::max_log:
                return max_log(dch, ys[u], c_, cfg_.sumis.llr_clip);
            case DetectorKind::soft_mmse:
                return soft_mmse(dch, ys[u], c_, prior ? *prior : uniform, cfg_.sumis.llr_clip);
            case DetectorKind::sumis:
                return prior ? sumis_dets[blk].detect(ys[u], *prior) : sumis_dets[blk].detect(ys[u]);
            case DetectorKind::pm:
                return pm_detect(dch, ys[u], cfg_.sumis.ns, c_, cfg_.sumis.llr_clip);
        }
        throw std::logic_error("unreachable detector kind");
    };

    FrameOutcome outcome;
    std::vector<PriorInfo> priors;  // one per use, empty = uniform pass
    DecodeResult dec;
    for (int round = 0; round <= cfg_.iterations; ++round) {
        LlrVector llr_code(code_.n, 0.0);
        for (int u = 0; u < uses_; ++u) {
            const LlrVector lu = detect_use(u, priors.empty() ? nullptr : &priors[u]);
            for (int t = 0; t < bits_per_use_; ++t)
                llr_code[interleaver_[static_cast<long>(u) * bits_per_use_ + t]] = lu[t];
        }
        dec = spa_decode(llr_code, code_, 50);
        ++outcome.decoder_runs;

        if (round == cfg_.iterations) break;

        // Decoder extrinsic -> per-symbol prior pmfs for the next pass.
        priors.assign(uses_, PriorInfo{});
        for (int u = 0; u < uses_; ++u) priors[u].pmf = RealMatrix(n_t_real, cfg_.m, 1.0);
        for (int i = 0; i < code_.n; ++i) {
            const double l = dec.extrinsic[interleaver_[i]];
            const double p1 = 1.0 / (1.0 + std::exp(-l));
            const int u = i / bits_per_use_;
            const int k = (i % bits_per_use_) / b;
            const int j = (i % bits_per_use_) % b;
            for (int pt = 0; pt < cfg_.m; ++pt) {
                const int bit = (c_.labels[pt] >> (b - 1 - j)) & 1;
                priors[u].pmf(k, pt) *= bit ? p1 : (1.0 - p1);
            }
        }
        for (int u = 0; u < uses_; ++u)
            for (int k = 0; k < n_t_real; ++k) {
                double z = 0.0;
                for (int pt = 0; pt < cfg_.m; ++pt) z += priors[u].pmf(k, pt);
                for (int pt = 0; pt < cfg_.m; ++pt) priors[u].pmf(k, pt) /= z;
            }
    }

    for (int i = 0; i < code_.k; ++i)
        if (dec.hard_bits[code_.info_positions[i]] != info[i]) ++outcome.bit_errors;
    outcome.frame_error = outcome.bit_errors > 0;
    return outcome;
}

PointResult Simulator::run_point(double ebn0_db) const {
    PointResult res;
    res.ebn0_db = ebn0_db;
    const auto t0 = std::chrono::steady_clock::now();

    ops::Counter& ctr = ops::counter();
    const bool was_enabled = ctr.enabled;
    ops::Tally saved[2] = {ctr.phases[0], ctr.phases[1]};
    if (cfg_.count_ops) {
        ctr.enabled = true;
        ctr.reset();
    }

    const long chunk = std::max(1, cfg_.workers) * 8L;
    long next_frame = 0;
    bool done = false;
    while (!done) {
        const long hi = std::min(next_frame + chunk, cfg_.max_frames);
        // Frames inside a chunk are independent (per-frame RNG streams); the
        // stop rule is applied by scanning outcomes in frame-index order, so
        // results never depend on the chunk size.
        std::vector<FrameOutcome> outcomes;
        outcomes.reserve(static_cast<std::size_t>(hi - next_frame));
        for (long f = next_frame; f < hi; ++f) outcomes.push_back(run_frame(ebn0_db, f));
        for (const FrameOutcome& oc : outcomes) {
            ++res.frames;
            res.bit_errors += oc.bit_errors;
            if (oc.frame_error) ++res.frame_errors;
            if (res.frame_errors >= cfg_.target_frame_errors) {
                done = true;
                break;
            }
        }
        next_frame = hi;
        if (next_frame >= cfg_.max_frames) done = true;
    }

    res.fer = res.frames > 0 ? static_cast<double>(res.frame_errors) / res.frames : 0.0;
    res.ber = res.frames > 0
                  ? static_cast<double>(res.bit_errors) / (static_cast<double>(res.frames) * code_.k)
                  : 0.0;
    if (cfg_.count_ops) {
        res.ops_y_indep = ctr.phases[0].elementary;
        res.ops_y_dep = ctr.phases[1].elementary;
        ctr.enabled = was_enabled;
        ctr.phases[0] = saved[0];
        ctr.phases[1] = saved[1];
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

SimResult Simulator::run_sweep() const {
    if (cfg_.ebn0_db.empty()) throw ConfigError("ebn0 grid is empty");
    SimResult result;
    for (double p : cfg_.ebn0_db) result.points.push_back(run_point(p));
    return result;
}

PointResult run_point(const SimConfig& cfg, double ebn0_db) { return Simulator(cfg).run_point(ebn0_db); }

SimResult run_sweep(const SimConfig& cfg) { return Simulator(cfg).run_sweep(); }

void write_csv(const SimResult& result, std::ostream& out) {
    out << "ebn0_db,frames,frame_errors,bit_errors,fer,ber,ops_y_indep,ops_y_dep,seconds\n";
    for (const PointResult& p : result.points) {
        std::ostringstream row;
        row.precision(10);
        row << p.ebn0_db << ',' << p.frames << ',' << p.frame_errors << ',' << p.bit_errors << ','
            << p.fer << ',' << p.ber << ',' << p.ops_y_indep << ',' << p.ops_y_dep << ',' << p.seconds;
        out << row.str() << '\n';
    }
}

std::string metadata_json(const SimConfig& cfg) {
    nlohmann::json j;
    j["detector"] = detector_name(cfg.detector);
    j["ns"] = cfg.sumis.ns;
    j["stage2"] = cfg.sumis.stage2_enabled;
    j["optimized"] = cfg.sumis.optimized_path;
    j["llr_clip"] = cfg.sumis.llr_clip;
    j["m"] = cfg.m;
    j["nt_complex"] = cfg.nt_c;
    j["nr_complex"] = cfg.nr_c;
    j["alist"] = cfg.alist_path;
    j["code_n"] = cfg.code_n;
    j["code_dv"] = cfg.code_dv;
    j["code_dc"] = cfg.code_dc;
    j["code_seed"] = cfg.code_seed;
    j["fading"] = cfg.fading == FadingMode::slow ? "slow" : "fast";
    j["fast_blocks"] = cfg.fast_blocks;
    j["ebn0_db"] = cfg.ebn0_db;
    j["target_frame_errors"] = cfg.target_frame_errors;
    j["max_frames"] = cfg.max_frames;
    j["iterations"] = cfg.iterations;
    j["icsi"] = cfg.icsi == IcsiHandling::none ? "none"
                : cfg.icsi == IcsiHandling::matched ? "matched"
                                                    : "mismatched";
    j["icsi_alpha"] = cfg.icsi_alpha;
    j["seed"] = cfg.seed;
    j["interleaver_seed"] = cfg.interleaver_seed;
    j["count_ops"] = cfg.count_ops;
    j["workers"] = cfg.workers;
    j["rng"] = Rng::algorithm;
    j["frame_error_definition"] = "any information-bit error after the final decode";
    j["bits_per_symbol"] = bits_for_order(cfg.m);
    return j.dump(2);
}

}  // namespace sumis
