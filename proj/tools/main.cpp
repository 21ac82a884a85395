#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sumis/opcount.hpp"
#include "sumis/sim.hpp"
#include "sumis/sumis.hpp"

namespace {

int cmd_sweep(const std::string& config_path, const std::string& output_path) {
    sumis::SimConfig cfg = sumis::parse_config_file(config_path);
    sumis::Simulator simulator(cfg);
    const sumis::SimResult result = simulator.run_sweep();

    std::ofstream csv(output_path);
    if (!csv) throw sumis::ConfigError("cannot open output file: " + output_path);
    sumis::write_csv(result, csv);

    std::ofstream meta(output_path + ".json");
    if (!meta) throw sumis::ConfigError("cannot open sidecar file: " + output_path + ".json");
    meta << sumis::metadata_json(cfg) << '\n';

    sumis::write_csv(result, std::cout);
    return 0;
}

int cmd_validate() {
    // Quick self-check: the appendix-optimized path must reproduce the naive
    // path, and full-subspace SUMIS must reproduce the exact LLRs.
    sumis::Rng rng(7);
    const sumis::Constellation c = sumis::make_constellation(2);
    int failures = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int nt = 6, nr = 6;
        sumis::RealMatrix h(nr, nt);
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nt; ++j) h(i, j) = rng.gaussian();
        sumis::RealChannel ch{h, 0.5};
        sumis::RealVector y(nr);
        for (double& v : y) v = rng.gaussian();
        const sumis::PriorInfo prior = sumis::PriorInfo::uniform(nt, 2);

        sumis::SumisConfig naive;
        naive.ns = 2;
        sumis::SumisConfig opt = naive;
        opt.optimized_path = true;
        const sumis::LlrVector a = sumis::sumis_detect(ch, y, naive, c, prior);
        const sumis::LlrVector b = sumis::sumis_detect(ch, y, opt, c, prior);
        for (std::size_t i = 0; i < a.size(); ++i)
            if (std::abs(a[i] - b[i]) > 1e-8) ++failures;

        sumis::SumisConfig full;
        full.ns = nt;
        const sumis::LlrVector s = sumis::sumis_detect(ch, y, full, c, prior);
        const sumis::LlrVector e = sumis::exact_llr(ch, y, c, prior);
        for (std::size_t i = 0; i < s.size(); ++i)
            if (std::abs(s[i] - e[i]) > 1e-8) ++failures;
    }
    std::cout << (failures == 0 ? "validate: OK" : "validate: FAILED") << '\n';
    return failures == 0 ? 0 : 2;
}

int cmd_opcount(const std::string& method, int nr, int nt, int ns, int m) {
    const sumis::OpCount formula = sumis::table_formula(method, nr, nt, ns, m);
    std::cout << "method=" << method << " nr=" << nr << " nt=" << nt << " ns=" << ns << " m=" << m
              << '\n';
    std::cout << "formula:  y_independent=" << formula.y_independent
              << " y_dependent=" << formula.y_dependent << '\n';
    if (method == "sumis") {
        const sumis::OpCount meas = sumis::measured_sumis_count(nt, nr, ns, m, true, 1);
        std::cout << "measured: y_independent=" << meas.y_independent
                  << " y_dependent=" << meas.y_dependent
                  << " (transcendental " << meas.transcendental_y_independent << '/'
                  << meas.transcendental_y_dependent << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SUMIS MIMO detection link-level simulator"};
    app.require_subcommand(1);

    std::string config_path, output_path = "sweep.csv";
    CLI::App* sweep = app.add_subcommand("sweep", "run an Eb/N0 sweep from a config file");
    sweep->add_option("-c,--config", config_path, "key = value config file")->required();
    sweep->add_option("-o,--output", output_path, "CSV output path (JSON sidecar alongside)");

    CLI::App* validate = app.add_subcommand("validate", "run quick oracle self-checks");

    std::string method = "sumis";
    int nr = 12, nt = 12, ns = 3, m = 2;
    CLI::App* opcount = app.add_subcommand("opcount", "closed-form vs measured operation counts");
    opcount->add_option("--method", method, "sumis | pm | softMmse | maxLog | exactLlr");
    opcount->add_option("--nr", nr, "receive dimension (real)");
    opcount->add_option("--nt", nt, "transmit dimension (real)");
    opcount->add_option("--ns", ns, "subspace dimension");
    opcount->add_option("--m", m, "constellation order");

    try {
        app.parse(argc, argv);
        if (sweep->parsed()) return cmd_sweep(config_path, output_path);
        if (validate->parsed()) return cmd_validate();
        if (opcount->parsed()) return cmd_opcount(method, nr, nt, ns, m);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const sumis::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const sumis::UnknownMethod& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
