#include "qkonc/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qkonc {

namespace {

constexpr double kEtaFloor = 1e-12;
constexpr double kBoundTol = 1e-12;

void check_symmetric(const Matrix& k, const char* who) {
    if (!k.square()) throw std::invalid_argument(std::string(who) + ": kernel not square");
    double amax = 0.0;
    for (double v : k.data) amax = std::max(amax, std::abs(v));
    const double tol = 1e-8 * std::max(1.0, amax);
    for (std::size_t i = 0; i < k.rows; ++i)
        for (std::size_t j = i + 1; j < k.cols; ++j)
            if (std::abs(k(i, j) - k(j, i)) > tol)
                throw std::invalid_argument(std::string(who) + ": kernel not symmetric");
}

Matrix gather(const Matrix& k, const std::vector<std::size_t>& rows,
              const std::vector<std::size_t>& cols) {
    Matrix out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = k(rows[i], cols[j]);
    return out;
}

std::vector<int> binary_labels(const LabelVector& y, const std::vector<std::size_t>& idx,
                               int positive_class) {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out[i] = y[idx[i]] == positive_class ? 1 : -1;
    return out;
}

struct TrainedSet {
    std::vector<SvmModel> models;  // size 1 for binary, one per class otherwise
    int num_classes = 2;
};

TrainedSet train_for_c(const Matrix& k, const LabelVector& y,
                       const std::vector<std::size_t>& train_idx, double c,
                       const SvmOptions& options) {
    int num_classes = 0;
    for (int label : y) num_classes = std::max(num_classes, label + 1);
    if (num_classes < 2) throw std::invalid_argument("svm: need at least 2 classes");
    for (int cls = 0; cls < num_classes; ++cls) {
        const bool present = std::any_of(train_idx.begin(), train_idx.end(),
                                         [&](std::size_t i) { return y[i] == cls; });
        if (!present)
            throw std::invalid_argument("svm: class " + std::to_string(cls) +
                                        " absent from training split");
    }
    const Matrix k_tr = gather(k, train_idx, train_idx);
    TrainedSet set;
    set.num_classes = num_classes;
    if (num_classes == 2) {
        set.models.push_back(svm_train(k_tr, binary_labels(y, train_idx, 1), c, options));
    } else {
        for (int cls = 0; cls < num_classes; ++cls)
            set.models.push_back(svm_train(k_tr, binary_labels(y, train_idx, cls), c, options));
    }
    return set;
}

LabelVector predict_set(const TrainedSet& set, const Matrix& k,
                        const std::vector<std::size_t>& train_idx,
                        const std::vector<std::size_t>& eval_idx) {
    const Matrix k_ev = gather(k, eval_idx, train_idx);
    if (set.num_classes == 2) {
        const std::vector<int> signs = svm_predict(set.models[0], k_ev);
        LabelVector out(signs.size());
        for (std::size_t i = 0; i < signs.size(); ++i) out[i] = signs[i] > 0 ? 1 : 0;
        return out;
    }
    std::vector<std::vector<double>> decisions(set.models.size());
    for (std::size_t m = 0; m < set.models.size(); ++m)
        decisions[m] = svm_decision(set.models[m], k_ev);
    LabelVector out(eval_idx.size(), 0);
    for (std::size_t i = 0; i < eval_idx.size(); ++i) {
        int best = 0;
        double best_value = decisions[0][i];
        for (std::size_t m = 1; m < set.models.size(); ++m)
            if (decisions[m][i] > best_value) {  // ties keep the smaller class id
                best_value = decisions[m][i];
                best = static_cast<int>(m);
            }
        out[i] = best;
    }
    return out;
}

double accuracy(const LabelVector& predicted, const LabelVector& truth,
                const std::vector<std::size_t>& idx) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < idx.size(); ++i)
        if (predicted[i] == truth[idx[i]]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(idx.size());
}

}  // namespace

SvmModel svm_train(const Matrix& k_train, const std::vector<int>& y, double c,
                   const SvmOptions& options) {
    check_symmetric(k_train, "svm_train");
    const std::size_t n = k_train.rows;
    if (y.size() != n) throw std::invalid_argument("svm_train: label count mismatch");
    if (n < 2) throw std::invalid_argument("svm_train: need n >= 2");
    if (!(c > 0.0)) throw std::invalid_argument("svm_train: C must be positive");
    bool has_pos = false, has_neg = false;
    for (int label : y) {
        if (label == 1)
            has_pos = true;
        else if (label == -1)
            has_neg = true;
        else
            throw std::invalid_argument("svm_train: labels must be -1 or +1");
    }
    if (!has_pos || !has_neg)
        throw std::invalid_argument("svm_train: single-class training labels");

    std::vector<double> alpha(n, 0.0);
    std::vector<double> f(n, 0.0);  // F_t = sum_j alpha_j y_j K_tj
    const std::size_t max_updates = options.pass_factor * n;

    const auto in_up = [&](std::size_t t) {
        return (y[t] == 1 && alpha[t] < c - kBoundTol) || (y[t] == -1 && alpha[t] > kBoundTol);
    };
    const auto in_low = [&](std::size_t t) {
        return (y[t] == -1 && alpha[t] < c - kBoundTol) || (y[t] == 1 && alpha[t] > kBoundTol);
    };

    SvmModel model;
    model.regularization = c;
    double violation = std::numeric_limits<double>::infinity();

    while (model.updates < max_updates) {
        // Maximal-violating pair: i maximizes y_t - F_t over the "up" set,
        // j minimizes it over the "low" set.
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double g = static_cast<double>(y[t]) - f[t];
            if (in_up(t) && g > m_up) {
                m_up = g;
                i = t;
            }
            if (in_low(t) && g < m_low) {
                m_low = g;
                j = t;
            }
        }
        if (i == n || j == n) {
            violation = 0.0;
            break;
        }
        violation = m_up - m_low;
        if (violation <= options.tolerance) break;

        const double yi = y[i], yj = y[j];
        const double e_i = f[i] - yi;
        const double e_j = f[j] - yj;
        double eta = k_train(i, i) + k_train(j, j) - 2.0 * k_train(i, j);
        if (eta < kEtaFloor) eta = kEtaFloor;

        double lo, hi;
        if (yi != yj) {
            lo = std::max(0.0, alpha[j] - alpha[i]);
            hi = std::min(c, c + alpha[j] - alpha[i]);
        } else {
            lo = std::max(0.0, alpha[i] + alpha[j] - c);
            hi = std::min(c, alpha[i] + alpha[j]);
        }
        double aj = alpha[j] + yj * (e_i - e_j) / eta;
        aj = std::clamp(aj, lo, hi);
        const double delta_j = aj - alpha[j];
        if (delta_j == 0.0) break;  // no representable progress left
        const double delta_i = -yi * yj * delta_j;
        alpha[j] = aj;
        alpha[i] = std::clamp(alpha[i] + delta_i, 0.0, c);

        const double gi = delta_i * yi;
        const double gj = delta_j * yj;
        for (std::size_t t = 0; t < n; ++t) f[t] += gi * k_train(t, i) + gj * k_train(t, j);
        ++model.updates;
    }

    model.converged = violation <= options.tolerance;
    model.kkt_residual = std::max(0.0, violation);

    // Bias from the KKT conditions: free support vectors give it exactly,
    // otherwise take the midpoint of the bound interval.
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > kBoundTol && alpha[t] < c - kBoundTol) {
            free_sum += static_cast<double>(y[t]) - f[t];
            ++free_count;
        }
    if (free_count > 0) {
        model.bias = free_sum / static_cast<double>(free_count);
    } else {
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double g = static_cast<double>(y[t]) - f[t];
            if (in_up(t)) m_up = std::max(m_up, g);
            if (in_low(t)) m_low = std::min(m_low, g);
        }
        if (std::isfinite(m_up) && std::isfinite(m_low))
            model.bias = 0.5 * (m_up + m_low);
        else if (std::isfinite(m_up))
            model.bias = m_up;
        else if (std::isfinite(m_low))
            model.bias = m_low;
    }

    model.dual_coef.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        model.dual_coef[t] = alpha[t] * static_cast<double>(y[t]);
        if (alpha[t] > kBoundTol) model.support_indices.push_back(t);
    }
    return model;
}

std::vector<double> svm_decision(const SvmModel& model, const Matrix& k_eval) {
    if (k_eval.cols != model.dual_coef.size())
        throw std::invalid_argument("svm_decision: column count != training size");
    std::vector<double> out(k_eval.rows, model.bias);
    for (std::size_t r = 0; r < k_eval.rows; ++r)
        for (std::size_t t = 0; t < k_eval.cols; ++t)
            out[r] += model.dual_coef[t] * k_eval(r, t);
    return out;
}

std::vector<int> svm_predict(const SvmModel& model, const Matrix& k_eval) {
    const std::vector<double> decision = svm_decision(model, k_eval);
    std::vector<int> out(decision.size());
    for (std::size_t i = 0; i < decision.size(); ++i) out[i] = decision[i] < 0.0 ? -1 : 1;
    return out;
}

double svm_dual_objective(const SvmModel& model, const Matrix& k_train,
                          const std::vector<int>& y) {
    const std::size_t n = model.dual_coef.size();
    if (k_train.rows != n || y.size() != n)
        throw std::invalid_argument("svm_dual_objective: size mismatch");
    double linear = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        linear += model.dual_coef[i] * static_cast<double>(y[i]);  // alpha_i
        for (std::size_t j = 0; j < n; ++j)
            quad += model.dual_coef[i] * model.dual_coef[j] * k_train(i, j);
    }
    return linear - 0.5 * quad;
}

LabelVector ovr_train_predict(const Matrix& k, const LabelVector& y,
                              const std::vector<std::size_t>& train_idx,
                              const std::vector<std::size_t>& eval_idx, double c,
                              const SvmOptions& options) {
    const TrainedSet set = train_for_c(k, y, train_idx, c, options);
    return predict_set(set, k, train_idx, eval_idx);
}

SelectionResult select_and_evaluate(const Matrix& k, const LabelVector& y,
                                    const SplitIndices& splits,
                                    const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("select_and_evaluate: empty C grid");
    if (splits.train.empty() || splits.val.empty() || splits.test.empty())
        throw std::invalid_argument("select_and_evaluate: empty split");
    if (y.size() != k.rows)
        throw std::invalid_argument("select_and_evaluate: label/kernel size mismatch");

    SelectionResult result;
    TrainedSet best_set;
    bool have_best = false;
    for (double c : grid) {
        TrainedSet set = train_for_c(k, y, splits.train, c, {});
        const LabelVector val_pred = predict_set(set, k, splits.train, splits.val);
        const double val_acc = accuracy(val_pred, y, splits.val);
        result.per_c_val_accuracies[c] = val_acc;
        if (!have_best || val_acc > result.val_accuracy) {  // ties keep the earlier C
            have_best = true;
            result.val_accuracy = val_acc;
            result.best_c = c;
            best_set = std::move(set);
        }
    }
    const LabelVector test_pred = predict_set(best_set, k, splits.train, splits.test);
    result.test_accuracy = accuracy(test_pred, y, splits.test);
    return result;
}

}  // namespace qkonc
