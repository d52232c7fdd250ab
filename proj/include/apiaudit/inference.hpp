#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace apiaudit::inference {

struct RegressionResult {
    std::vector<std::string> names;  // "(intercept)" first
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd t_values;
    Eigen::VectorXd p_values;  // two-sided, exact t distribution
    double r_squared = 0.0;
    int n = 0;
};

/// Least squares with an intercept prepended to the design. Errors on a
/// rank-deficient design, naming the offending column.
RegressionResult ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                         std::vector<std::string> column_names = {});

struct CorrelationResult {
    double rho = 0.0;
    double p_value = 1.0;
};

/// Pearson correlation of mid-ranks (average ranks on ties); p via the t
/// approximation with n-2 degrees of freedom.
CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y);

struct DetectionMetrics {
    double accuracy_pct = 0.0;
    std::optional<double> fpr_pct;  // over honest cases; absent when no honest cases
    std::optional<double> fnr_pct;  // over deceptive cases
};

/// predictions/ground_truth are "deceptive?" labels.
DetectionMetrics detection_metrics(const std::vector<bool>& predicted_deceptive,
                                   const std::vector<bool>& truly_deceptive);

/// Mid-ranks with average ranks assigned to ties.
std::vector<double> midranks(const std::vector<double>& values);

/// Two-sided p-value for a t statistic with df degrees of freedom.
double t_two_sided_p(double t, double df);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace apiaudit::inference
