#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tvu/common.hpp"
#include "tvu/dense.hpp"
#include "tvu/io.hpp"
#include "tvu/operators.hpp"
#include "tvu/prng.hpp"

namespace tvu {

/*
 * Synthetic piecewise-constant regression problems: a shared Gaussian design
 * A, sources u = Lz with s-sparse jump coordinates z, observations
 * x = Au + eps with the noise rescaled per sample so ||Au|| / ||eps|| hits
 * the requested SNR exactly. First half of the rows train, second half test.
 *
 * On disk (format TVDS1): manifest.json plus raw little-endian float64
 * row-major arrays A.f64, X.f64, U.f64.
 */
struct DatasetMeta {
    std::size_t n = 0, m = 0, k = 0, s = 0;
    double snr = 0.0;
    std::uint64_t seed = 0;
    std::size_t split_index = 0;
};

struct Dataset {
    DenseMatrix A;  // m x k
    DenseMatrix X;  // n x m, one observation per row
    DenseMatrix U;  // n x k, one source per row
    DatasetMeta meta;
};

inline Dataset generate(std::size_t n, std::size_t k, std::size_t m, std::size_t s,
                        double snr, std::uint64_t seed) {
    require(n >= 2 && n % 2 == 0, "generate: sample count must be even");
    require(s >= 1 && s <= k, "generate: sparsity out of range");
    require(m >= 1 && k >= 1, "generate: empty dimensions");
    require(snr > 0.0, "generate: SNR must be positive");

    Dataset ds;
    ds.meta = {n, m, k, s, snr, seed, n / 2};
    Xoshiro256pp gen(seed);

    ds.A = DenseMatrix(m, k);
    for (auto& v : ds.A.data) v = gen.next_gaussian();
    ds.X = DenseMatrix(n, m);
    ds.U = DenseMatrix(n, k);

    std::vector<std::size_t> idx(k);
    Vector z(k), eps(m);
    for (std::size_t i = 0; i < n; ++i) {
        // s distinct jump positions, uniform over all coordinates
        for (std::size_t j = 0; j < k; ++j) idx[j] = j;
        for (std::size_t j = 0; j < s; ++j) {
            const std::size_t swap_with = j + gen.next_below(k - j);
            std::swap(idx[j], idx[swap_with]);
        }
        std::fill(z.begin(), z.end(), 0.0);
        for (std::size_t j = 0; j < s; ++j) z[idx[j]] = gen.next_gaussian();
        const Vector u = apply_L(z);

        const Vector au = matvec(ds.A, u);
        for (auto& e : eps) e = gen.next_gaussian();
        const double n_au = norm2(au);
        const double n_eps = norm2(eps);
        if (n_au == 0.0 || n_eps == 0.0)
            throw std::runtime_error("generate: degenerate sample (zero signal or noise)");
        const double scale = n_au / (snr * n_eps);

        for (std::size_t j = 0; j < k; ++j) ds.U(i, j) = u[j];
        for (std::size_t j = 0; j < m; ++j) ds.X(i, j) = au[j] + scale * eps[j];
    }
    return ds;
}

inline void save(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest{
        {"format_version", "TVDS1"},
        {"n", ds.meta.n},
        {"m", ds.meta.m},
        {"k", ds.meta.k},
        {"s", ds.meta.s},
        {"snr", ds.meta.snr},
        {"seed", ds.meta.seed},
        {"split_index", ds.meta.split_index},
    };
    std::ofstream out(dir / "manifest.json");
    if (!out) throw FormatError("cannot write manifest: " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
    write_f64(dir / "A.f64", ds.A.data);
    write_f64(dir / "X.f64", ds.X.data);
    write_f64(dir / "U.f64", ds.U.data);
}

inline Dataset load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw FormatError("missing manifest: " + (dir / "manifest.json").string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed manifest: " + std::string(e.what()));
    }
    if (!manifest.contains("format_version") || manifest["format_version"] != "TVDS1")
        throw FormatError("unsupported dataset format version");

    Dataset ds;
    try {
        ds.meta.n = manifest.at("n").get<std::size_t>();
        ds.meta.m = manifest.at("m").get<std::size_t>();
        ds.meta.k = manifest.at("k").get<std::size_t>();
        ds.meta.s = manifest.at("s").get<std::size_t>();
        ds.meta.snr = manifest.at("snr").get<double>();
        ds.meta.seed = manifest.at("seed").get<std::uint64_t>();
        ds.meta.split_index = manifest.at("split_index").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest missing fields: " + std::string(e.what()));
    }
    const auto& meta = ds.meta;
    ds.A = DenseMatrix(meta.m, meta.k);
    ds.A.data = read_f64(dir / "A.f64", meta.m * meta.k);
    ds.X = DenseMatrix(meta.n, meta.m);
    ds.X.data = read_f64(dir / "X.f64", meta.n * meta.m);
    ds.U = DenseMatrix(meta.n, meta.k);
    ds.U.data = read_f64(dir / "U.f64", meta.n * meta.k);
    if (!ds.A.finite() || !ds.X.finite() || !ds.U.finite())
        throw FormatError("dataset contains non-finite values");
    return ds;
}

}  // namespace tvu
