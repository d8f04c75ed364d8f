#include "igrate/design.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "igrate/errors.hpp"
#include "igrate/rng.hpp"

namespace igrate {

Design make_design(const BondDataset& ds, const std::vector<std::string>& covariates, const std::string& response,
                   const std::string& cluster_column) {
    if (response != "i_ra") throw ConfigError("response column must be i_ra, got '" + response + "'");
    for (std::size_t i = 0; i < covariates.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (covariates[i] == covariates[j]) throw ConfigError("covariate '" + covariates[i] + "' listed twice");
    Design d;
    d.names = covariates;
    d.y = ds.response();
    d.x = ds.covariate_matrix(covariates);
    if (!cluster_column.empty()) {
        for (const auto& r : ds.rows) {
            if (cluster_column == "issuer_id")
                d.clusters.push_back(r.issuer_id);
            else if (cluster_column == "province")
                d.clusters.push_back(r.province);
            else if (cluster_column == "bond_id")
                d.clusters.push_back(r.bond_id);
            else
                throw ConfigError("unsupported cluster column '" + cluster_column + "'");
        }
    }
    return d;
}

std::vector<std::size_t> canonical_order(const Design& d) {
    std::vector<std::size_t> order(d.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (d.y[a] != d.y[b]) return d.y[a] < d.y[b];
        for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
            auto xa = std::bit_cast<std::uint64_t>(d.x(static_cast<Eigen::Index>(a), j));
            auto xb = std::bit_cast<std::uint64_t>(d.x(static_cast<Eigen::Index>(b), j));
            if (xa != xb) return xa < xb;
        }
        if (!d.clusters.empty()) return d.clusters[a] < d.clusters[b];
        return false;
    });
    return order;
}

Design reorder(const Design& d, const std::vector<std::size_t>& order) {
    Design out;
    out.names = d.names;
    out.x.resize(static_cast<Eigen::Index>(order.size()), d.x.cols());
    out.y.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = d.x.row(static_cast<Eigen::Index>(order[i]));
        out.y.push_back(d.y[order[i]]);
        if (!d.clusters.empty()) out.clusters.push_back(d.clusters[order[i]]);
    }
    return out;
}

std::uint64_t fingerprint(const Design& d) {
    Design c = reorder(d, canonical_order(d));
    std::string bytes;
    for (const auto& n : c.names) bytes += n + '\0';
    for (std::size_t i = 0; i < c.rows(); ++i) {
        bytes.append(reinterpret_cast<const char*>(&c.y[i]), sizeof(int));
        for (Eigen::Index j = 0; j < c.x.cols(); ++j) {
            double v = c.x(static_cast<Eigen::Index>(i), j);
            bytes.append(reinterpret_cast<const char*>(&v), sizeof(double));
        }
    }
    return rng::fnv1a64(bytes);
}

Standardization standardize_checked(const Design& d) {
    auto n = static_cast<Eigen::Index>(d.rows());
    auto k = d.x.cols();
    Standardization s;
    s.mean = Eigen::VectorXd::Zero(k);
    s.sd = Eigen::VectorXd::Zero(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) sum += d.x(i, j);
        double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) ss += (d.x(i, j) - mean) * (d.x(i, j) - mean);
        double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        if (!(sd > 0.0) || sd <= 1e-12 * std::max(1.0, std::abs(mean)))
            throw CollinearityError("covariate '" + d.names[static_cast<std::size_t>(j)] +
                                    "' is constant and collinear with the cutpoints");
        s.mean(j) = mean;
        s.sd(j) = sd;
    }
    if (k > 0) {
        Eigen::MatrixXd z(n, k + 1);
        z.col(0).setOnes();
        z.rightCols(k) = apply(s, d.x);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
        qr.setThreshold(1e-10);
        if (qr.rank() < k + 1) {
            std::string dependent;
            auto perm = qr.colsPermutation().indices();
            for (Eigen::Index r = qr.rank(); r < k + 1; ++r) {
                Eigen::Index col = perm(r);
                std::string name = col == 0 ? "(intercept)" : d.names[static_cast<std::size_t>(col - 1)];
                dependent += (dependent.empty() ? "" : ", ") + name;
            }
            throw CollinearityError("covariate matrix is rank deficient; linearly dependent columns: " + dependent);
        }
    }
    return s;
}

RowMatrix apply(const Standardization& s, const RowMatrix& x) {
    RowMatrix z(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) z(i, j) = (x(i, j) - s.mean(j)) / s.sd(j);
    return z;
}

}  // namespace igrate
