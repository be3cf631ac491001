#pragma once

// SVM on precomputed kernels: an SMO dual solver with maximal-violating-pair
// working-set selection, a one-vs-rest wrapper for multi-class labels, and
// the validation-selected-C evaluation protocol shared by every kernel family.

#include <map>
#include <vector>

#include "qkonc/data.hpp"
#include "qkonc/matrix.hpp"

namespace qkonc {

struct SvmModel {
    std::vector<double> dual_coef;  // alpha_i * y_i per training sample
    double bias = 0.0;
    std::vector<std::size_t> support_indices;  // alpha_i > 0
    double regularization = 1.0;               // C
    bool converged = true;
    double kkt_residual = 0.0;  // final max KKT violation
    std::size_t updates = 0;
};

struct SvmOptions {
    double tolerance = 1e-3;       // stop when the max KKT violation drops below
    std::size_t pass_factor = 200; // update cap = pass_factor * n
};

// Trains on a symmetric kernel block with labels in {-1, +1}; both classes
// must be present. On hitting the update cap the model is returned with
// converged = false and the achieved residual.
SvmModel svm_train(const Matrix& k_train, const std::vector<int>& y, double c,
                   const SvmOptions& options = {});

// k_eval rows are k(x_eval, x_train). Returns the raw decision values; the
// predicted label is their sign with exact zeros mapped to +1.
std::vector<double> svm_decision(const SvmModel& model, const Matrix& k_eval);
std::vector<int> svm_predict(const SvmModel& model, const Matrix& k_eval);

// Dual objective sum(alpha) - 1/2 sum alpha_i alpha_j y_i y_j K_ij of a model.
double svm_dual_objective(const SvmModel& model, const Matrix& k_train,
                          const std::vector<int>& y);

// One binary model per class (that class vs rest); prediction is the argmax
// of raw decision values with ties broken toward the smallest class id.
// Two-class problems use a single direct model (class id 1 maps to +1).
LabelVector ovr_train_predict(const Matrix& k, const LabelVector& y,
                              const std::vector<std::size_t>& train_idx,
                              const std::vector<std::size_t>& eval_idx, double c,
                              const SvmOptions& options = {});

struct SelectionResult {
    double best_c = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::map<double, double> per_c_val_accuracies;
};

// For each C in grid order: train on the train split, score on validation.
// The first C attaining the maximum validation accuracy wins; its models are
// then evaluated exactly once on the test split.
SelectionResult select_and_evaluate(const Matrix& k, const LabelVector& y,
                                    const SplitIndices& splits,
                                    const std::vector<double>& grid = {0.1, 1.0, 10.0});

}  // namespace qkonc
