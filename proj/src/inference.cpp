#include "apiaudit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "apiaudit/errors.hpp"

namespace apiaudit::inference {

namespace {

// Continued-fraction evaluation for the regularized incomplete beta (Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double df) {
    if (df <= 0) throw AuditError("t distribution needs positive degrees of freedom");
    if (!std::isfinite(t)) return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

RegressionResult ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                         std::vector<std::string> column_names) {
    const int n = int(design.rows());
    const int k = int(design.cols());
    if (response.size() != n) throw AuditError("ols_fit: X and y row counts differ");
    if (n <= k + 1) throw AuditError("ols_fit: need n > k + 1 observations");

    Eigen::MatrixXd X(n, k + 1);
    X.col(0).setOnes();
    X.rightCols(k) = design;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k + 1) {
        // The first columns of the pivot permutation carry the independent
        // set; the first pivot index at or past the rank is a dependent one.
        const auto& perm = qr.colsPermutation().indices();
        int offending = int(perm[qr.rank()]);
        std::string name = offending == 0 ? "(intercept)"
                           : offending - 1 < int(column_names.size())
                               ? column_names[offending - 1]
                               : "x" + std::to_string(offending);
        throw AuditError("ols_fit: design is rank deficient (column '" + name + "')");
    }

    RegressionResult result;
    result.n = n;
    result.coefficients = qr.solve(response);

    const Eigen::VectorXd residuals = response - X * result.coefficients;
    const double rss = residuals.squaredNorm();
    const double df = double(n - k - 1);
    const double sigma2 = rss / df;

    const Eigen::MatrixXd xtx_inv =
        (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
    result.std_errors = (sigma2 * xtx_inv.diagonal()).cwiseSqrt();
    result.t_values = result.coefficients.cwiseQuotient(result.std_errors);
    result.p_values.resize(k + 1);
    for (int i = 0; i <= k; ++i)
        result.p_values[i] = t_two_sided_p(result.t_values[i], df);

    const double tss = (response.array() - response.mean()).matrix().squaredNorm();
    result.r_squared = tss > 0 ? 1.0 - rss / tss : 1.0;

    result.names.reserve(k + 1);
    result.names.push_back("(intercept)");
    for (int i = 0; i < k; ++i)
        result.names.push_back(i < int(column_names.size()) ? column_names[i]
                                                            : "x" + std::to_string(i + 1));
    return result;
}

std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg_rank = (double(i) + double(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg_rank;
        i = j + 1;
    }
    return ranks;
}

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw AuditError("spearman: vectors differ in length");
    const int n = int(x.size());
    if (n < 3) throw AuditError("spearman: need at least 3 observations");

    auto rx = midranks(x);
    auto ry = midranks(y);
    double mean = double(n + 1) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx <= 0 || syy <= 0)
        throw AuditError("spearman: correlation undefined for a constant vector");

    CorrelationResult result;
    result.rho = sxy / std::sqrt(sxx * syy);
    const double denom = 1.0 - result.rho * result.rho;
    if (denom < 1e-15) {
        result.p_value = 0.0;
    } else {
        const double t = result.rho * std::sqrt(double(n - 2) / denom);
        result.p_value = t_two_sided_p(t, double(n - 2));
    }
    return result;
}

DetectionMetrics detection_metrics(const std::vector<bool>& predicted_deceptive,
                                   const std::vector<bool>& truly_deceptive) {
    if (predicted_deceptive.size() != truly_deceptive.size())
        throw AuditError("detection_metrics: label vectors differ in length");
    if (predicted_deceptive.empty()) throw AuditError("detection_metrics: no cases");

    int fp = 0, fn = 0, honest = 0, deceptive = 0;
    for (std::size_t i = 0; i < truly_deceptive.size(); ++i) {
        if (truly_deceptive[i]) {
            ++deceptive;
            if (!predicted_deceptive[i]) ++fn;
        } else {
            ++honest;
            if (predicted_deceptive[i]) ++fp;
        }
    }
    DetectionMetrics m;
    m.accuracy_pct =
        100.0 * double(int(truly_deceptive.size()) - fp - fn) / double(truly_deceptive.size());
    if (honest > 0) m.fpr_pct = 100.0 * double(fp) / double(honest);
    if (deceptive > 0) m.fnr_pct = 100.0 * double(fn) / double(deceptive);
    return m;
}

}  // namespace apiaudit::inference
