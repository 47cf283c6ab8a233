// Micro-benchmark for the two hot paths: transaction parsing and daily
// aggregation, parallel entry points against the serial references on the
// same synthetic data. Usage: bench_aggregate [n_transactions]

#include "localdiff/index.hpp"
#include "localdiff/ingest.hpp"
#include "localdiff/report.hpp"
#include "localdiff/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace localdiff;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

synth::ScenarioConfig sized_config(long long target_txns) {
    synth::ScenarioConfig cfg;
    cfg.seed = 99;
    cfg.authorities_per_group = 8;
    const long long days =
        cfg.data_end - cfg.data_start + 1; // generator emits on every span day
    cfg.daily_txns_per_authority =
        static_cast<int>(std::max(1LL, target_txns / (days * 2 * cfg.authorities_per_group)));
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    const long long target = argc > 1 ? std::atoll(argv[1]) : 1000000;
    const synth::ScenarioConfig cfg = sized_config(target);

    std::printf("generating ~%lld transactions...\n", target);
    const synth::ScenarioData data = synth::gen_scenario(cfg);
    std::printf("  %zu transactions\n", data.transactions.size());

    std::ostringstream csv;
    report::write_transactions_csv(csv, data.transactions);
    const std::string text = csv.str();
    std::printf("  %.1f MiB of CSV\n", static_cast<double>(text.size()) / (1 << 20));

#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif

    auto t0 = std::chrono::steady_clock::now();
    ParseResult parsed = parse_transactions_text(text);
    const double parse_par = ms_since(t0);
    std::printf("parse: %8.1f ms (%d thread%s)\n", parse_par, threads, threads == 1 ? "" : "s");

#ifdef _OPENMP
    omp_set_num_threads(1);
    t0 = std::chrono::steady_clock::now();
    ParseResult parsed_serial = parse_transactions_text(text);
    const double parse_ser = ms_since(t0);
    omp_set_num_threads(threads);
    std::printf("parse: %8.1f ms (serial)  speedup %.2fx\n", parse_ser, parse_ser / parse_par);
    if (parsed_serial.txns.size() != parsed.txns.size()) {
        std::printf("MISMATCH: serial parse saw %zu rows, parallel %zu\n",
                    parsed_serial.txns.size(), parsed.txns.size());
        return 1;
    }
#endif

    FilterResult filtered = filter_transactions(std::move(parsed.txns));
    ResolveResult resolved =
        resolve_geography(std::move(filtered.kept), data.geo, GeoBasis::cardholder);

    LocalityGroup everything;
    everything.name = "all";
    everything.authorities = data.treated_authorities;
    everything.authorities.insert(everything.authorities.end(),
                                  data.control_authorities.begin(),
                                  data.control_authorities.end());
    everything.population_2019 = 1;
    const DateInterval span{cfg.data_start, cfg.data_end};
    const Filters filters{}; // no category/channel restriction

    t0 = std::chrono::steady_clock::now();
    DailySeries parallel = aggregate_daily(resolved.tagged, everything, filters, span);
    const double agg_par = ms_since(t0);
    std::printf("aggregate: %8.1f ms (%d thread%s)\n", agg_par, threads,
                threads == 1 ? "" : "s");

    t0 = std::chrono::steady_clock::now();
    DailySeries serial = aggregate_daily_serial(resolved.tagged, everything, filters, span);
    const double agg_ser = ms_since(t0);
    std::printf("aggregate: %8.1f ms (serial)  speedup %.2fx\n", agg_ser, agg_ser / agg_par);

    if (parallel.values != serial.values) {
        std::printf("MISMATCH: parallel and serial aggregation differ\n");
        return 1;
    }
    std::printf("parallel and serial totals identical\n");
    return 0;
}
