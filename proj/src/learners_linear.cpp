#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gumdrop/learners.hpp"

namespace gumdrop {

namespace {

Eigen::MatrixXd design_matrix(const Dataset& ds, const OneHotEncoding& enc,
                              const std::vector<int>& rows, bool bias) {
    const int n = static_cast<int>(rows.size());
    Eigen::MatrixXd X(n, enc.width + (bias ? 1 : 0));
    for (int i = 0; i < n; ++i) {
        auto x = encode(ds.records[rows[i]], enc);
        for (int j = 0; j < enc.width; ++j) X(i, j) = x[j];
        if (bias) X(i, enc.width) = 1.0;
    }
    return X;
}

// Softmax rows of Z in place.
void softmax_rows(Eigen::MatrixXd& Z) {
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        double mx = Z.row(i).maxCoeff();
        Z.row(i) = (Z.row(i).array() - mx).exp();
        Z.row(i) /= Z.row(i).sum();
    }
}

struct LogisticFit {
    Eigen::MatrixXd W;  // K x (D+1)
};

double logistic_objective(const Eigen::MatrixXd& X, const std::vector<int>& y, int K,
                          const Eigen::MatrixXd& W, double lambda, Eigen::MatrixXd* grad) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();  // includes bias column
    Eigen::MatrixXd Z = X * W.transpose();
    softmax_rows(Z);
    double loss = 0;
    for (Eigen::Index i = 0; i < n; ++i) loss -= std::log(std::max(Z(i, y[i]), 1e-300));
    loss /= double(n);
    // L2 on everything but the bias column.
    loss += 0.5 * lambda * W.leftCols(d - 1).squaredNorm();
    if (grad) {
        for (Eigen::Index i = 0; i < n; ++i) Z(i, y[i]) -= 1.0;
        *grad = (Z.transpose() * X) / double(n);
        grad->leftCols(d - 1) += lambda * W.leftCols(d - 1);
    }
    return loss;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& y, int K, double lambda,
                         const LinearParams& params) {
    const Eigen::Index d = X.cols();
    LogisticFit fit;
    fit.W = Eigen::MatrixXd::Zero(K, d);
    double step = 1.0;
    Eigen::MatrixXd grad;
    double loss = logistic_objective(X, y, K, fit.W, lambda, &grad);
    for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
        if (grad.cwiseAbs().maxCoeff() <= params.tol) break;
        // Backtracking step with a mild Armijo condition; the accepted step
        // seeds the next epoch.
        double g2 = grad.squaredNorm();
        double t = std::min(step * 2.0, 1e4);
        Eigen::MatrixXd W_new;
        double loss_new = 0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            W_new = fit.W - t * grad;
            loss_new = logistic_objective(X, y, K, W_new, lambda, nullptr);
            if (loss_new <= loss - 1e-4 * t * g2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        step = t;
        fit.W = std::move(W_new);
        loss = logistic_objective(X, y, K, fit.W, lambda, &grad);
    }
    return fit;
}

double logistic_cv_loss(const Eigen::MatrixXd& X, const std::vector<int>& y, int K, double lambda,
                        const LinearParams& params, const std::vector<std::vector<int>>& folds) {
    double total = 0;
    int scored = 0;
    for (const auto& fold : folds) {
        std::vector<char> in_fold(X.rows(), 0);
        for (int i : fold) in_fold[i] = 1;
        std::vector<int> train_rows;
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            if (!in_fold[i]) train_rows.push_back(static_cast<int>(i));
        if (train_rows.empty() || fold.empty()) continue;
        Eigen::MatrixXd Xtr(train_rows.size(), X.cols());
        std::vector<int> ytr(train_rows.size());
        for (size_t i = 0; i < train_rows.size(); ++i) {
            Xtr.row(i) = X.row(train_rows[i]);
            ytr[i] = y[train_rows[i]];
        }
        LogisticFit fit = fit_logistic(Xtr, ytr, K, lambda, params);
        for (int i : fold) {
            Eigen::VectorXd z = fit.W * X.row(i).transpose();
            double mx = z.maxCoeff();
            Eigen::VectorXd e = (z.array() - mx).exp();
            total -= std::log(std::max(e(y[i]) / e.sum(), 1e-300));
            ++scored;
        }
    }
    return scored ? total / scored : 0.0;
}

std::vector<std::vector<int>> cv_folds(size_t n, int k, uint64_t seed) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    int folds_n = std::min<int>(k, static_cast<int>(n));
    std::vector<std::vector<int>> folds(folds_n);
    for (size_t i = 0; i < n; ++i) folds[i % folds_n].push_back(idx[i]);
    return folds;
}

std::unique_ptr<TrainedModel> train_logistic(const Dataset& ds, const std::vector<double>& reg_grid,
                                             const LinearParams& params) {
    const int K = static_cast<int>(ds.classes.size());
    auto model = std::make_unique<LogisticModel>(ds.schema.fingerprint(), ds.classes);
    model->enc = OneHotEncoding::build(ds.schema);

    std::vector<char> present(K, 0);
    for (int l : ds.labels) present.at(l) = 1;
    const int n_present = std::accumulate(present.begin(), present.end(), 0);
    if (n_present <= 1) {
        model->constant = true;
        model->constant_probs.assign(K, 0.0);
        model->constant_probs[ds.labels.empty() ? 0 : ds.labels[0]] = 1.0;
        return model;
    }

    std::vector<int> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    Eigen::MatrixXd X = design_matrix(ds, model->enc, all, /*bias=*/true);

    double best_lambda = reg_grid.front();
    if (reg_grid.size() > 1 && ds.size() >= 2) {
        auto folds = cv_folds(ds.size(), params.cv_folds, params.seed);
        double best_loss = 0;
        bool first = true;
        for (double lambda : reg_grid) {
            double loss = logistic_cv_loss(X, ds.labels, K, lambda, params, folds);
            if (first || loss < best_loss) {
                best_loss = loss;
                best_lambda = lambda;
                first = false;
            }
        }
    }
    LogisticFit fit = fit_logistic(X, ds.labels, K, best_lambda, params);
    model->lambda = best_lambda;
    model->weights.resize(size_t(K) * (model->enc.width + 1));
    for (int k = 0; k < K; ++k)
        for (int j = 0; j <= model->enc.width; ++j)
            model->weights[size_t(k) * (model->enc.width + 1) + j] = fit.W(k, j);
    return model;
}

std::unique_ptr<TrainedModel> train_ridge(const Dataset& ds, const std::vector<double>& reg_grid,
                                          const LinearParams& params) {
    auto model = std::make_unique<RidgeModel>(ds.schema.fingerprint());
    model->enc = OneHotEncoding::build(ds.schema);
    model->has_intercept = params.fit_intercept;

    std::vector<int> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    Eigen::MatrixXd X = design_matrix(ds, model->enc, all, params.fit_intercept);
    Eigen::VectorXd y(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) y(i) = ds.targets[i];

    auto solve = [&](const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda) {
        const Eigen::Index d = A.cols();
        Eigen::MatrixXd G = A.transpose() * A;
        for (Eigen::Index j = 0; j < d; ++j) {
            bool is_bias = params.fit_intercept && j == d - 1;
            if (!is_bias) G(j, j) += lambda;
        }
        Eigen::VectorXd rhs = A.transpose() * b;
        return Eigen::VectorXd(G.ldlt().solve(rhs));
    };

    double best_lambda = reg_grid.front();
    if (reg_grid.size() > 1 && ds.size() >= 2) {
        auto folds = cv_folds(ds.size(), params.cv_folds, params.seed);
        double best_mse = 0;
        bool first = true;
        for (double lambda : reg_grid) {
            double se = 0;
            int scored = 0;
            for (const auto& fold : folds) {
                std::vector<char> in_fold(ds.size(), 0);
                for (int i : fold) in_fold[i] = 1;
                std::vector<int> train_rows;
                for (size_t i = 0; i < ds.size(); ++i)
                    if (!in_fold[i]) train_rows.push_back(static_cast<int>(i));
                if (train_rows.empty() || fold.empty()) continue;
                Eigen::MatrixXd Xtr(train_rows.size(), X.cols());
                Eigen::VectorXd ytr(train_rows.size());
                for (size_t i = 0; i < train_rows.size(); ++i) {
                    Xtr.row(i) = X.row(train_rows[i]);
                    ytr(i) = y(train_rows[i]);
                }
                Eigen::VectorXd w = solve(Xtr, ytr, lambda);
                for (int i : fold) {
                    double err = X.row(i).dot(w) - y(i);
                    se += err * err;
                    ++scored;
                }
            }
            double mse = scored ? se / scored : 0.0;
            if (first || mse < best_mse) {
                best_mse = mse;
                best_lambda = lambda;
                first = false;
            }
        }
    }
    Eigen::VectorXd w = solve(X, y, best_lambda);
    model->lambda = best_lambda;
    model->w.assign(w.data(), w.data() + model->enc.width);
    model->intercept = params.fit_intercept ? w(model->enc.width) : 0.0;
    return model;
}

}  // namespace

double logistic_loss_grad(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                          int n_classes, const std::vector<double>& W, double lambda,
                          std::vector<double>* grad) {
    const int n = static_cast<int>(X.size());
    const int d = static_cast<int>(X[0].size()) + 1;  // bias appended
    Eigen::MatrixXd Xm(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d - 1; ++j) Xm(i, j) = X[i][j];
        Xm(i, d - 1) = 1.0;
    }
    Eigen::MatrixXd Wm(n_classes, d);
    for (int k = 0; k < n_classes; ++k)
        for (int j = 0; j < d; ++j) Wm(k, j) = W[size_t(k) * d + j];
    Eigen::MatrixXd G;
    double loss = logistic_objective(Xm, y, n_classes, Wm, lambda, grad ? &G : nullptr);
    if (grad) {
        grad->resize(size_t(n_classes) * d);
        for (int k = 0; k < n_classes; ++k)
            for (int j = 0; j < d; ++j) (*grad)[size_t(k) * d + j] = G(k, j);
    }
    return loss;
}

std::unique_ptr<TrainedModel> train_linear(const Dataset& ds, ModelKind task,
                                           const std::vector<double>& reg_grid,
                                           const LinearParams& params) {
    if (ds.records.empty()) throw TrainError("train_linear: empty dataset");
    if (reg_grid.empty()) throw TrainError("train_linear: empty regularization grid");
    if (task == ModelKind::logistic) {
        if (ds.labels.size() != ds.size()) throw TrainError("train_linear: labels missing");
        return train_logistic(ds, reg_grid, params);
    }
    if (task == ModelKind::ridge) {
        if (ds.targets.size() != ds.size()) throw TrainError("train_linear: targets missing");
        return train_ridge(ds, reg_grid, params);
    }
    throw TrainError("train_linear handles logistic and ridge only");
}

}  // namespace gumdrop
