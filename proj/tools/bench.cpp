// Benchmark of the OpenMP paths against their serial references:
// feature extraction across series and client training within a round.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fedtab/data.hpp"
#include "fedtab/featurize.hpp"
#include "fedtab/federation.hpp"
#include "fedtab/rng.hpp"

using namespace fedtab;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SeriesDataset make_series(int count, int min_len, int max_len, std::uint64_t seed) {
    SeriesDataset ds;
    ds.class_names = {"a", "b"};
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        RawSeries s;
        s.label = static_cast<int>(rng.index(2));
        const std::size_t len = min_len + rng.index(max_len - min_len + 1);
        s.values.reserve(len);
        for (std::size_t t = 0; t < len; ++t)
            s.values.push_back(std::sin(0.07 * t * (1 + s.label)) + 0.3 * rng.normal());
        ds.examples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled\n");
#endif

    {
        const SeriesDataset ds = make_series(1500, 100, 2400, 7);
        auto t0 = std::chrono::steady_clock::now();
        const TabularDataset serial = featurize_dataset_serial(ds);
        const double t_serial = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        const TabularDataset parallel = featurize_dataset(ds, true);
        const double t_parallel = seconds_since(t0);

        double max_diff = 0.0;
        for (std::size_t i = 0; i < serial.rows.size(); ++i)
            max_diff = std::max(max_diff, std::abs(serial.rows[i] - parallel.rows[i]));
        std::printf("featurize %zu series: serial %.3fs, parallel %.3fs (x%.2f), max diff %g\n",
                    ds.size(), t_serial, t_parallel, t_serial / t_parallel, max_diff);
    }

    {
        const TabularDataset tab = synth_blobs(3, 24, 300, 0.25, 11);
        const PartitionPlan plan = split_dataset(tab, SplitSpec{}, 3, 11);
        TabNetConfig mc;
        mc.input_dim = static_cast<int>(tab.dim());
        mc.n_classes = 3;
        RoundConfig rc;
        rc.n_clients = 3;
        rc.clients_per_round = 3;
        rc.total_rounds = 5;

        Federation fed_seq = init_federation(tab, plan, mc, rc, 11);
        auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < rc.total_rounds; ++r) run_round(fed_seq, tab, rc, false);
        const double t_seq = seconds_since(t0);

        Federation fed_par = init_federation(tab, plan, mc, rc, 11);
        t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < rc.total_rounds; ++r) run_round(fed_par, tab, rc, true);
        const double t_par = seconds_since(t0);

        double max_diff = 0.0;
        for (std::size_t i = 0; i < fed_seq.server.params.tensors.size(); ++i)
            for (std::size_t k = 0; k < fed_seq.server.params.tensors[i].values.size(); ++k)
                max_diff = std::max(max_diff,
                                    std::abs(fed_seq.server.params.tensors[i].values[k] -
                                             fed_par.server.params.tensors[i].values[k]));
        std::printf("federation %d rounds x %d clients: sequential %.3fs, parallel %.3fs (x%.2f), "
                    "param max diff %g\n",
                    rc.total_rounds, rc.n_clients, t_seq, t_par, t_seq / t_par, max_diff);
    }
    return 0;
}
