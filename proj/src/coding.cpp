#include "sumis/coding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace sumis {

namespace {

// Dense GF(2) row as packed words, enough for elimination at desk scale.
struct BitRow {
    std::vector<std::uint64_t> w;
    explicit BitRow(int n) : w((n + 63) / 64, 0) {}
    void set(int i) { w[i >> 6] |= 1ULL << (i & 63); }
    bool get(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }
    void operator^=(const BitRow& o) {
        for (std::size_t t = 0; t < w.size(); ++t) w[t] ^= o.w[t];
    }
};

// Build the systematic encoder: RREF over GF(2); pivot columns become
// parity positions, free columns carry the info bits.
void build_encoder(CodeSpec& code) {
    const int n = code.n;
    const int m = static_cast<int>(code.check_vars.size());
    std::vector<BitRow> rows;
    rows.reserve(m);
    for (int r = 0; r < m; ++r) {
        BitRow br(n);
        for (int v : code.check_vars[r]) br.set(v);
        rows.push_back(std::move(br));
    }

    std::vector<int> pivot_of_row;
    std::vector<bool> is_pivot(n, false);
    int rank = 0;
    for (int col = 0; col < n && rank < m; ++col) {
        int sel = -1;
        for (int r = rank; r < m; ++r)
            if (rows[r].get(col)) {
                sel = r;
                break;
            }
        if (sel < 0) continue;
        std::swap(rows[rank], rows[sel]);
        for (int r = 0; r < m; ++r)
            if (r != rank && rows[r].get(col)) rows[r] ^= rows[rank];
        pivot_of_row.push_back(col);
        is_pivot[col] = true;
        ++rank;
    }

    code.k = n - rank;
    code.info_positions.clear();
    std::vector<int> info_index_of_col(n, -1);
    for (int col = 0; col < n; ++col)
        if (!is_pivot[col]) {
            info_index_of_col[col] = static_cast<int>(code.info_positions.size());
            code.info_positions.push_back(col);
        }

    code.pivot_cols.assign(pivot_of_row.begin(), pivot_of_row.end());
    code.pivot_deps.assign(rank, {});
    for (int r = 0; r < rank; ++r)
        for (int col = 0; col < n; ++col)
            if (!is_pivot[col] && rows[r].get(col)) code.pivot_deps[r].push_back(info_index_of_col[col]);
}

void build_var_checks(CodeSpec& code) {
    code.var_checks.assign(code.n, {});
    for (std::size_t r = 0; r < code.check_vars.size(); ++r)
        for (int v : code.check_vars[r]) code.var_checks[v].push_back(static_cast<int>(r));
}

}  // namespace

CodeSpec load_alist(std::istream& in) {
    std::vector<std::vector<long>> lines;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::istringstream ls(raw);
        std::vector<long> vals;
        long v;
        while (ls >> v) vals.push_back(v);
        if (!ls.eof()) throw ParseError("alist line " + std::to_string(line_no) + ": non-numeric token");
        lines.push_back(std::move(vals));
    }
    // Drop trailing blank lines, keep interior structure.
    while (!lines.empty() && lines.back().empty()) lines.pop_back();

    std::size_t li = 0;
    auto need = [&](const char* what) -> const std::vector<long>& {
        while (li < lines.size() && lines[li].empty()) ++li;
        if (li >= lines.size()) throw ParseError(std::string("alist: unexpected end of input, expected ") + what);
        return lines[li++];
    };

    const auto& hdr = need("header 'n m'");
    if (hdr.size() != 2 || hdr[0] < 1 || hdr[1] < 1) throw ParseError("alist line 1: expected 'n m'");
    const int n = static_cast<int>(hdr[0]);
    const int m = static_cast<int>(hdr[1]);

    need("max degrees");  // informative only; actual degrees are re-derived

    const auto& vdeg = need("variable degree list");
    if (static_cast<int>(vdeg.size()) != n) throw ParseError("alist: variable degree list length mismatch");
    const auto& cdeg = need("check degree list");
    if (static_cast<int>(cdeg.size()) != m) throw ParseError("alist: check degree list length mismatch");

    CodeSpec code;
    code.n = n;
    code.check_vars.assign(m, {});
    std::vector<std::vector<int>> var_lists(n);

    for (int v = 0; v < n; ++v) {
        const auto& row = need("variable adjacency row");
        std::vector<int> entries;
        for (long x : row) {
            if (x == 0) continue;  // zero padding
            if (x < 1 || x > m) throw ParseError("alist: variable adjacency index out of range");
            entries.push_back(static_cast<int>(x - 1));
        }
        if (static_cast<int>(entries.size()) != vdeg[v])
            throw InconsistentDegrees("alist: variable " + std::to_string(v + 1) + " degree mismatch");
        var_lists[v] = std::move(entries);
    }
    for (int r = 0; r < m; ++r) {
        const auto& row = need("check adjacency row");
        std::vector<int> entries;
        for (long x : row) {
            if (x == 0) continue;
            if (x < 1 || x > n) throw ParseError("alist: check adjacency index out of range");
            entries.push_back(static_cast<int>(x - 1));
        }
        if (static_cast<int>(entries.size()) != cdeg[r])
            throw InconsistentDegrees("alist: check " + std::to_string(r + 1) + " degree mismatch");
        code.check_vars[r] = std::move(entries);
    }

    // Cross-validate the two adjacency views.
    std::vector<std::vector<int>> from_checks(n);
    for (int r = 0; r < m; ++r)
        for (int v : code.check_vars[r]) from_checks[v].push_back(r);
    for (int v = 0; v < n; ++v) {
        std::vector<int> a = var_lists[v], b = from_checks[v];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) throw InconsistentDegrees("alist: adjacency lists disagree at variable " + std::to_string(v + 1));
    }

    build_var_checks(code);
    build_encoder(code);
    return code;
}

CodeSpec load_alist_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open alist file: " + path);
    return load_alist(f);
}

void save_alist(const CodeSpec& code, std::ostream& out) {
    const int n = code.n;
    const int m = static_cast<int>(code.check_vars.size());
    int max_dv = 0, max_dc = 0;
    for (const auto& l : code.var_checks) max_dv = std::max(max_dv, static_cast<int>(l.size()));
    for (const auto& l : code.check_vars) max_dc = std::max(max_dc, static_cast<int>(l.size()));
    out << n << ' ' << m << '\n' << max_dv << ' ' << max_dc << '\n';
    for (int v = 0; v < n; ++v) out << code.var_checks[v].size() << (v + 1 < n ? ' ' : '\n');
    for (int r = 0; r < m; ++r) out << code.check_vars[r].size() << (r + 1 < m ? ' ' : '\n');
    for (int v = 0; v < n; ++v) {
        for (std::size_t i = 0; i < code.var_checks[v].size(); ++i)
            out << code.var_checks[v][i] + 1 << (i + 1 < code.var_checks[v].size() ? ' ' : '\n');
        if (code.var_checks[v].empty()) out << '\n';
    }
    for (int r = 0; r < m; ++r) {
        for (std::size_t i = 0; i < code.check_vars[r].size(); ++i)
            out << code.check_vars[r][i] + 1 << (i + 1 < code.check_vars[r].size() ? ' ' : '\n');
        if (code.check_vars[r].empty()) out << '\n';
    }
}

CodeSpec generate_regular_ldpc(int n, int dv, int dc, Rng& rng) {
    if (n < 2 || dv < 2 || dc <= dv) throw InfeasibleParameters("generate_regular_ldpc: need n >= 2, 2 <= dv < dc");
    if ((static_cast<long long>(n) * dv) % dc != 0)
        throw InfeasibleParameters("generate_regular_ldpc: n*dv must be divisible by dc");
    const int m = static_cast<int>(static_cast<long long>(n) * dv / dc);
    const int edges = n * dv;

    // Gallager construction: permute variable sockets onto check sockets,
    // then repair duplicate edges by random swaps.
    std::vector<int> socket(edges);
    for (int e = 0; e < edges; ++e) socket[e] = e / dv;  // variable of socket e
    for (int e = edges - 1; e > 0; --e) {
        const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(e + 1));
        std::swap(socket[e], socket[j]);
    }

    auto check_of = [&](int e) { return e / dc; };
    auto has_duplicate = [&](int e) {
        const int chk = check_of(e);
        for (int t = chk * dc; t < (chk + 1) * dc; ++t)
            if (t != e && socket[t] == socket[e]) return true;
        return false;
    };
    for (int pass = 0; pass < 100; ++pass) {
        bool clean = true;
        for (int e = 0; e < edges; ++e) {
            int guard = 0;
            while (has_duplicate(e) && guard++ < 1000) {
                const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(edges));
                std::swap(socket[e], socket[j]);
                clean = false;
            }
        }
        if (clean) break;
    }
    for (int e = 0; e < edges; ++e)
        if (has_duplicate(e)) throw InfeasibleParameters("generate_regular_ldpc: could not remove duplicate edges");

    // Best-effort 4-cycle reduction: two checks sharing two variables form a
    // 4-cycle; swap one offending edge with a random one and keep the swap
    // when it does not create duplicates.
    auto count_pair_cycles = [&](int chk_a, int chk_b) {
        int shared = 0;
        for (int ea = chk_a * dc; ea < (chk_a + 1) * dc; ++ea)
            for (int eb = chk_b * dc; eb < (chk_b + 1) * dc; ++eb)
                if (socket[ea] == socket[eb]) ++shared;
        return shared;
    };
    (void)count_pair_cycles;
    for (int pass = 0; pass < 10; ++pass) {
        bool changed = false;
        // Index: for each variable, its check list; 4-cycle iff two checks
        // appear together in two different variables' lists.
        std::vector<std::vector<int>> var_chk(n);
        for (int e = 0; e < edges; ++e) var_chk[socket[e]].push_back(check_of(e));
        std::vector<std::vector<int>> seen_pair_var;  // lazy: map via sorted pair set
        std::vector<long long> pairs;
        pairs.reserve(static_cast<std::size_t>(n) * dv * (dv - 1) / 2);
        for (int v = 0; v < n; ++v) {
            auto& cl = var_chk[v];
            std::sort(cl.begin(), cl.end());
            for (std::size_t i = 0; i < cl.size(); ++i)
                for (std::size_t j = i + 1; j < cl.size(); ++j)
                    pairs.push_back(static_cast<long long>(cl[i]) * m + cl[j]);
        }
        std::sort(pairs.begin(), pairs.end());
        for (std::size_t i = 1; i < pairs.size(); ++i) {
            if (pairs[i] != pairs[i - 1]) continue;
            // locate one edge of the cycle and swap it away
            const int chk_a = static_cast<int>(pairs[i] / m);
            const int chk_b = static_cast<int>(pairs[i] % m);
            int victim = -1;
            for (int ea = chk_a * dc; ea < (chk_a + 1) * dc && victim < 0; ++ea)
                for (int eb = chk_b * dc; eb < (chk_b + 1) * dc; ++eb)
                    if (socket[ea] == socket[eb]) {
                        victim = ea;
                        break;
                    }
            if (victim < 0) continue;
            for (int attempt = 0; attempt < 50; ++attempt) {
                const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(edges));
                std::swap(socket[victim], socket[j]);
                if (!has_duplicate(victim) && !has_duplicate(j)) {
                    changed = true;
                    break;
                }
                std::swap(socket[victim], socket[j]);  // undo
            }
        }
        if (!changed) break;
    }

    CodeSpec code;
    code.n = n;
    code.check_vars.assign(m, {});
    for (int e = 0; e < edges; ++e) code.check_vars[check_of(e)].push_back(socket[e]);
    for (auto& row : code.check_vars) std::sort(row.begin(), row.end());
    build_var_checks(code);
    build_encoder(code);
    return code;
}

std::vector<int> encode(const CodeSpec& code, const std::vector<int>& info) {
    if (info.size() != static_cast<std::size_t>(code.k))
        throw LengthMismatch("encode: info length must equal k");
    std::vector<int> x(code.n, 0);
    for (int i = 0; i < code.k; ++i) x[code.info_positions[i]] = info[i] & 1;
    for (std::size_t r = 0; r < code.pivot_cols.size(); ++r) {
        int acc = 0;
        for (int idx : code.pivot_deps[r]) acc ^= info[idx] & 1;
        x[code.pivot_cols[r]] = acc;
    }
    return x;
}

bool parity_ok(const CodeSpec& code, const std::vector<int>& word) {
    for (const auto& row : code.check_vars) {
        int acc = 0;
        for (int v : row) acc ^= word[v] & 1;
        if (acc) return false;
    }
    return true;
}

DecodeResult spa_decode(const LlrVector& llrs, const CodeSpec& code, int max_iters) {
    if (llrs.size() != static_cast<std::size_t>(code.n))
        throw LengthMismatch("spa_decode: llr length must equal n");

    // Internal sign convention: L = log(p0/p1), so the API input (positive
    // means bit 1) is negated at the boundary.
    std::vector<double> chan(code.n);
    for (int v = 0; v < code.n; ++v) chan[v] = -llrs[v];

    const int m = static_cast<int>(code.check_vars.size());
    // Edge storage, check-major.
    std::vector<int> edge_var;
    std::vector<int> check_start(m + 1, 0);
    for (int r = 0; r < m; ++r) {
        check_start[r + 1] = check_start[r] + static_cast<int>(code.check_vars[r].size());
        for (int v : code.check_vars[r]) edge_var.push_back(v);
    }
    const int n_edges = static_cast<int>(edge_var.size());
    std::vector<double> v2c(n_edges), c2v(n_edges, 0.0);
    for (int e = 0; e < n_edges; ++e) v2c[e] = chan[edge_var[e]];

    std::vector<double> posterior = chan;
    std::vector<int> hard(code.n);
    auto harden = [&]() {
        for (int v = 0; v < code.n; ++v) hard[v] = posterior[v] > 0.0 ? 0 : 1;
    };

    DecodeResult res;
    harden();
    if (parity_ok(code, hard)) {
        res.hard_bits = hard;
        res.extrinsic.assign(code.n, 0.0);
        res.converged = true;
        res.iterations = 0;
        return res;
    }

    std::vector<double> tanh_buf, prefix, suffix;
    for (int iter = 1; iter <= max_iters; ++iter) {
        // Check update: all-but-one tanh products via prefix/suffix scans.
        for (int r = 0; r < m; ++r) {
            const int lo = check_start[r], hi = check_start[r + 1], deg = hi - lo;
            tanh_buf.assign(deg, 0.0);
            for (int t = 0; t < deg; ++t) {
                double th = std::tanh(0.5 * v2c[lo + t]);
                if (std::fabs(th) < 1e-12) th = th < 0 ? -1e-12 : 1e-12;
                if (th > 1.0 - 1e-15) th = 1.0 - 1e-15;
                if (th < -1.0 + 1e-15) th = -1.0 + 1e-15;
                tanh_buf[t] = th;
            }
            prefix.assign(deg + 1, 1.0);
            suffix.assign(deg + 1, 1.0);
            for (int t = 0; t < deg; ++t) prefix[t + 1] = prefix[t] * tanh_buf[t];
            for (int t = deg - 1; t >= 0; --t) suffix[t] = suffix[t + 1] * tanh_buf[t];
            for (int t = 0; t < deg; ++t) {
                double p = prefix[t] * suffix[t + 1];
                p = std::clamp(p, -(1.0 - 1e-15), 1.0 - 1e-15);
                c2v[lo + t] = 2.0 * std::atanh(p);
            }
        }
        // Variable update.
        for (int v = 0; v < code.n; ++v) posterior[v] = chan[v];
        for (int e = 0; e < n_edges; ++e) posterior[edge_var[e]] += c2v[e];
        for (int e = 0; e < n_edges; ++e) v2c[e] = posterior[edge_var[e]] - c2v[e];

        harden();
        if (parity_ok(code, hard)) {
            res.converged = true;
            res.iterations = iter;
            break;
        }
        res.iterations = iter;
    }

    res.hard_bits = hard;
    res.extrinsic.assign(code.n, 0.0);
    for (int v = 0; v < code.n; ++v) res.extrinsic[v] = -(posterior[v] - chan[v]);
    return res;
}

}  // namespace sumis
