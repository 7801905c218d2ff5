#include "cwlssvm/solvers.hpp"

#include <algorithm>
#include <sstream>

#include "cwlssvm/error.hpp"
#include "cwlssvm/rng.hpp"

namespace cwlssvm {

namespace {

Matrix bordered_matrix(const KktSystem& sys) {
    const Index n = sys.size();
    Matrix a(n + 1, n + 1);
    a(0, 0) = 0.0;
    a.block(0, 1, 1, n) = sys.border.transpose();
    a.block(1, 0, n, 1) = sys.border;
    a.bottomRightCorner(n, n) = sys.block;
    return a;
}

} // namespace

SolveReport solve_kkt(const KktSystem& sys) {
    const Index n = sys.size();
    if (n == 0 || sys.block.cols() != n || sys.border.size() != n || sys.rhs.size() != n) {
        throw InvalidArgument("solve_kkt: inconsistent system dimensions");
    }
    if (!sys.block.allFinite() || !sys.border.allFinite() || !sys.rhs.allFinite() || !std::isfinite(sys.rhs_top)) {
        throw InvalidArgument("solve_kkt: non-finite entries");
    }
    const Matrix a = bordered_matrix(sys);
    Vector rhs(n + 1);
    rhs[0] = sys.rhs_top;
    rhs.tail(n) = sys.rhs;

    const Eigen::PartialPivLU<Matrix> lu(a);
    const double rcond = lu.rcond();
    SolveReport report;
    report.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(report.condition_estimate <= kMaxConditionEstimate)) {
        std::ostringstream os;
        os << "solve_kkt: bordered system is singular or ill-conditioned (condition estimate "
           << report.condition_estimate << " > " << kMaxConditionEstimate
           << "); increase the diagonal shift of the kernel block (smaller gamma / eta, or a larger ridge)";
        throw NumericalError(os.str());
    }

    Vector x = lu.solve(rhs);
    Vector residual = rhs - a * x;
    const double tol = 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    int sweeps = 0;
    while (residual.lpNorm<Eigen::Infinity>() > 1e-3 * tol && sweeps < 2) {
        x += lu.solve(residual);
        residual = rhs - a * x;
        ++sweeps;
    }
    report.residual_norm = residual.lpNorm<Eigen::Infinity>();
    if (!x.allFinite() || report.residual_norm > tol) {
        std::ostringstream os;
        os << "solve_kkt: residual " << report.residual_norm << " exceeds " << tol
           << " after refinement; increase the diagonal shift of the kernel block";
        throw NumericalError(os.str());
    }
    report.bias = x[0];
    report.coef = x.tail(n);
    report.iterations = 1 + sweeps;
    report.converged = true;
    return report;
}

double ComponentL1Problem::objective(const Vector& alpha, double bias) const {
    double penalty = 0.0;
    for (const auto& g : blocks) {
        penalty += (g * alpha).lpNorm<1>();
    }
    const Vector e = targets - fit_gram * alpha - Vector::Constant(targets.size(), bias);
    return 0.5 * penalty + 0.5 * xi * e.squaredNorm();
}

namespace {

struct Candidate {
    Vector alpha;
    double bias = 0.0;
    double objective = std::numeric_limits<double>::infinity();
};

// Rows of all penalized blocks stacked, so that row i is a_i with term |a_i alpha|.
Matrix stacked_blocks(const ComponentL1Problem& p) {
    Index rows = 0;
    for (const auto& g : p.blocks) {
        rows += g.rows();
    }
    Matrix a(rows, p.points());
    Index at = 0;
    for (const auto& g : p.blocks) {
        a.middleRows(at, g.rows()) = g;
        at += g.rows();
    }
    return a;
}

// Exact minimizer of the problem restricted to a face: terms in `zero` are
// forced to vanish, the remaining ones contribute sign_i * a_i alpha.
Candidate solve_on_face(const ComponentL1Problem& p, const Matrix& a, const Vector& signs,
                        const std::vector<Index>& zero) {
    const Index n = p.points();
    const Index z = static_cast<Index>(zero.size());
    const Index dim = n + 2 + z;
    const Vector ones = Vector::Ones(n);
    Matrix k = Matrix::Zero(dim, dim);
    Vector r = Vector::Zero(dim);
    const Matrix& om = p.fit_gram;
    k.topLeftCorner(n, n) = p.xi * om.transpose() * om;
    k.block(0, n, n, 1) = p.xi * om.transpose() * ones;
    k.block(n, 0, 1, n) = k.block(0, n, n, 1).transpose();
    k(n, n) = p.xi * static_cast<double>(n);
    k.block(0, n + 1, n, 1) = ones;
    k.block(n + 1, 0, 1, n) = ones.transpose();
    for (Index j = 0; j < z; ++j) {
        k.block(0, n + 2 + j, n, 1) = a.row(zero[static_cast<std::size_t>(j)]).transpose();
        k.block(n + 2 + j, 0, 1, n) = a.row(zero[static_cast<std::size_t>(j)]);
    }
    r.head(n) = p.xi * om.transpose() * p.targets;
    if (a.rows() > 0) {
        Vector s = signs;
        for (Index i : zero) {
            s[i] = 0.0;
        }
        r.head(n) -= 0.5 * a.transpose() * s;
    }
    r[n] = p.xi * p.targets.sum();
    const Vector x = k.completeOrthogonalDecomposition().solve(r);
    Candidate c;
    c.alpha = x.head(n);
    c.alpha.array() -= c.alpha.mean(); // remove round-off from the sum constraint
    c.bias = x[n];
    if (c.alpha.allFinite() && std::isfinite(c.bias)) {
        c.objective = p.objective(c.alpha, c.bias);
    }
    return c;
}

Candidate polish(const ComponentL1Problem& p, const Matrix& a, const Candidate& start) {
    Candidate best = start;
    if (a.rows() == 0) {
        return solve_on_face(p, a, Vector(), {});
    }
    const Vector values = a * start.alpha;
    const double scale = std::max(values.lpNorm<Eigen::Infinity>(), 1e-300);
    // Thresholds from coarse to fine; each defines a candidate zero set. The
    // pattern found on a face is fed back once to refine signs.
    for (double rel : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8, 0.0}) {
        Vector anchor = values;
        for (int round = 0; round < 3; ++round) {
            std::vector<Index> zero;
            Vector signs(anchor.size());
            for (Index i = 0; i < anchor.size(); ++i) {
                signs[i] = anchor[i] >= 0.0 ? 1.0 : -1.0;
                if (std::abs(anchor[i]) <= rel * scale) {
                    zero.push_back(i);
                }
            }
            if (static_cast<Index>(zero.size()) > p.points()) {
                break;
            }
            const Candidate c = solve_on_face(p, a, signs, zero);
            if (c.objective < best.objective) {
                best = c;
            }
            anchor = a * c.alpha;
            for (Index i : zero) {
                anchor[i] = 0.0;
            }
        }
    }
    return best;
}

// Coordinates gamma with alpha = T gamma such that the map gamma -> (Omega alpha, A alpha)
// has orthonormal columns on the sum-zero subspace; directions invisible to
// both the fit and the penalty are dropped.
Matrix whitening(const ComponentL1Problem& p, const Matrix& a) {
    const Index n = p.points();
    Matrix basis = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix q = (qr.householderQ() * Matrix::Identity(n, n)).leftCols(n - 1);
    Matrix m(n + a.rows(), n - 1);
    m.topRows(n) = p.fit_gram * q;
    if (a.rows() > 0) {
        m.bottomRows(a.rows()) = a * q;
    }
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    Index keep = 0;
    while (keep < sv.size() && sv[keep] > 1e-13 * std::max(sv[0], 1e-300)) {
        ++keep;
    }
    return q * svd.matrixV().leftCols(keep) * sv.head(keep).cwiseInverse().asDiagonal();
}

Candidate subgradient_descent(const ComponentL1Problem& p, const Matrix& a, const Matrix& t, Vector gamma,
                              double bias, int iterations) {
    const Index n = p.points();
    const Matrix f = p.fit_gram * t;
    const Matrix pa = a * t;
    Candidate best{t * gamma, bias, p.objective(t * gamma, bias)};
    const double radius = 1.0 + std::sqrt(gamma.squaredNorm() + bias * bias) +
                          p.targets.lpNorm<Eigen::Infinity>();
    Vector grad(gamma.size());
    for (int k = 0; k < iterations; ++k) {
        const Vector e = p.targets - f * gamma - Vector::Constant(n, bias);
        grad = -p.xi * (f.transpose() * e);
        if (pa.rows() > 0) {
            const Vector s = (pa * gamma).unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
            grad += 0.5 * (pa.transpose() * s);
        }
        const double gb = -p.xi * e.sum();
        const double norm = std::sqrt(grad.squaredNorm() + gb * gb);
        if (norm == 0.0) {
            break;
        }
        const double step = radius / std::sqrt(static_cast<double>(k) + 1.0) / norm * 0.1;
        gamma -= step * grad;
        bias -= step * gb;
        if ((k & 63) == 0 || k + 1 == iterations) {
            const Vector alpha = t * gamma;
            const double value = p.objective(alpha, bias);
            if (value < best.objective) {
                best = {alpha, bias, value};
            }
        }
    }
    return best;
}

} // namespace

OracleSolution brute_force_qp_oracle(const ComponentL1Problem& problem, const OracleConfig& config) {
    const Index n = problem.points();
    if (n > 10 || problem.blocks.size() > 3) {
        throw InvalidArgument("brute_force_qp_oracle: instance too large (cap: N <= 10, at most 3 components)");
    }
    if (n < 2 || problem.fit_gram.cols() != n || problem.targets.size() != n) {
        throw InvalidArgument("brute_force_qp_oracle: inconsistent dimensions");
    }
    for (const auto& g : problem.blocks) {
        if (g.cols() != n) {
            throw InvalidArgument("brute_force_qp_oracle: block column count differs from N");
        }
    }
    const int iterations = std::clamp(config.iterations, 1, 1'000'000);
    const Matrix a = stacked_blocks(problem);

    const Matrix t = whitening(problem, a);
    Rng rng(config.seed);
    Candidate best;
    const double spread = 1.0 + problem.targets.lpNorm<Eigen::Infinity>();
    for (int s = 0; s < std::max(1, config.starts); ++s) {
        Vector gamma = Vector::Zero(t.cols());
        double bias = problem.targets.mean();
        if (s > 0) {
            for (Index i = 0; i < gamma.size(); ++i) {
                gamma[i] = spread * (2.0 * rng.uniform() - 1.0);
            }
            bias = spread * (2.0 * rng.uniform() - 1.0);
        }
        Candidate c = subgradient_descent(problem, a, t, gamma, bias, iterations);
        c = polish(problem, a, c);
        if (c.objective < best.objective) {
            best = c;
        }
    }
    return {best.alpha, best.bias, best.objective};
}

NnlsResult nnls(const Matrix& a, const Vector& b, int max_iter, double tol) {
    if (a.rows() != b.size()) {
        throw InvalidArgument("nnls: A has " + std::to_string(a.rows()) + " rows but b has " + std::to_string(b.size()));
    }
    const Index n = a.cols();
    if (max_iter < 0) {
        max_iter = static_cast<int>(3 * n + 10);
    }
    NnlsResult out;
    out.x = Vector::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double scale = tol * std::max(1.0, a.lpNorm<Eigen::Infinity>() * std::max(1.0, b.lpNorm<Eigen::Infinity>()));

    // least squares on the passive set, zero elsewhere
    auto solve_passive = [&]() {
        std::vector<Index> idx;
        for (Index j = 0; j < n; ++j) {
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        }
        Vector z = Vector::Zero(n);
        if (idx.empty()) return z;
        Matrix sub(a.rows(), static_cast<Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Index>(k)) = a.col(idx[k]);
        const Vector zs = sub.colPivHouseholderQr().solve(b);
        for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zs[static_cast<Index>(k)];
        return z;
    };

    while (true) {
        const Vector w = a.transpose() * (b - a * out.x);
        Index best = -1;
        double best_w = scale;
        for (Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
                best_w = w[j];
                best = j;
            }
        }
        if (best < 0) break;
        if (out.iterations >= max_iter) {
            out.converged = false;
            break;
        }
        passive[static_cast<std::size_t>(best)] = true;
        while (true) {
            ++out.iterations;
            Vector z = solve_passive();
            bool feasible = true;
            double step = 1.0;
            for (Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0) {
                    feasible = false;
                    const double denom = out.x[j] - z[j];
                    if (denom > 0.0) step = std::min(step, out.x[j] / denom);
                }
            }
            if (feasible) {
                out.x = z;
                break;
            }
            out.x += step * (z - out.x);
            for (Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && out.x[j] <= scale) {
                    passive[static_cast<std::size_t>(j)] = false;
                    out.x[j] = 0.0;
                }
            }
            if (out.iterations >= max_iter) {
                out.converged = false;
                return out;
            }
        }
    }
    return out;
}

} // namespace cwlssvm
