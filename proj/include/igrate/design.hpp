#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "igrate/bond_data.hpp"

namespace igrate {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Estimation input: response codes 1..C and covariates in column order.
struct Design {
    RowMatrix x;
    std::vector<int> y;
    std::vector<std::string> names;
    std::vector<std::string> clusters;  // empty unless cluster-robust SEs are requested

    std::size_t rows() const noexcept { return y.size(); }
    Eigen::Index cols() const noexcept { return x.cols(); }
};

// cluster_column: one of bond_id, issuer_id, province (or empty for none).
Design make_design(const BondDataset& ds, const std::vector<std::string>& covariates,
                   const std::string& response = "i_ra", const std::string& cluster_column = "");

// Row order sorted on (y, x bit patterns, cluster). Estimators run on this
// order, so any permutation of the input yields bit-identical results.
std::vector<std::size_t> canonical_order(const Design& d);
Design reorder(const Design& d, const std::vector<std::size_t>& order);

// FNV-1a over the canonical rows; identifies "the same data" across fits.
std::uint64_t fingerprint(const Design& d);

struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
};

// Column means and sample sds. Throws CollinearityError for a constant column
// or for columns linearly dependent on the others and the intercept.
Standardization standardize_checked(const Design& d);
RowMatrix apply(const Standardization& s, const RowMatrix& x);

// Fixed-size row blocks evaluated by up to `workers` threads and combined by
// an indexed pairwise tree, so the sum is bit-identical for any worker count.
inline constexpr std::size_t kRowBlock = 512;

template <class Acc, class BlockFn>
Acc reduce_rows(std::size_t n, int workers, const Acc& zero, BlockFn&& block_fn) {
    std::size_t blocks = (n + kRowBlock - 1) / kRowBlock;
    if (blocks == 0) return zero;
    std::vector<Acc> partial(blocks, zero);
    auto run = [&](std::size_t first, std::size_t stride) {
        for (std::size_t b = first; b < blocks; b += stride) block_fn(b * kRowBlock, std::min(n, (b + 1) * kRowBlock), partial[b]);
    };
    std::size_t threads = std::min<std::size_t>(blocks, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        run(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(run, w, threads);
        for (auto& t : pool) t.join();
    }
    while (partial.size() > 1) {
        std::vector<Acc> next;
        next.reserve((partial.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < partial.size(); i += 2) {
            next.push_back(std::move(partial[i]));
            next.back() += partial[i + 1];
        }
        if (partial.size() % 2) next.push_back(std::move(partial.back()));
        partial = std::move(next);
    }
    return std::move(partial.front());
}

}  // namespace igrate
