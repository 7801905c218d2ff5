#include "cwlssvm/kernels.hpp"

#include <cmath>
#include <sstream>

#include "cwlssvm/error.hpp"

namespace cwlssvm {

std::string_view to_string(KernelFamily family) {
    switch (family) {
    case KernelFamily::Rbf:
        return "rbf";
    case KernelFamily::Linear:
        return "linear";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
    if (name == "rbf" || name == "RBF") {
        return KernelFamily::Rbf;
    }
    if (name == "linear" || name == "lin") {
        return KernelFamily::Linear;
    }
    throw InvalidArgument("unknown kernel family '" + std::string(name) + "'");
}

double ComponentKernel::operator()(double u, double v) const {
    if (family == KernelFamily::Linear) {
        return u * v;
    }
    const double diff = u - v;
    return std::exp(-(diff * diff) / (sigma * sigma));
}

std::string ComponentKernel::label() const {
    std::ostringstream os;
    os << to_string(family) << "(x" << (input + 1) << ")";
    return os.str();
}

double eval_kernel(const ComponentKernel& kernel, double u, double v) {
    if (!std::isfinite(u) || !std::isfinite(v)) {
        throw InvalidArgument("eval_kernel: non-finite argument");
    }
    if (kernel.family == KernelFamily::Rbf && !(kernel.sigma > 0.0)) {
        throw InvalidArgument("eval_kernel: RBF bandwidth must be positive");
    }
    return kernel(u, v);
}

KernelSpec::KernelSpec(std::vector<ComponentKernel> components) : components_(std::move(components)) {
    for (std::size_t d = 0; d < components_.size(); ++d) {
        const auto& c = components_[d];
        if (c.input < 0) {
            throw InvalidArgument("KernelSpec: negative input index for component " + std::to_string(d + 1));
        }
        if (c.family == KernelFamily::Rbf && !(c.sigma > 0.0 && std::isfinite(c.sigma))) {
            throw InvalidArgument("KernelSpec: RBF bandwidth must be positive (component " + std::to_string(d + 1) +
                                  ")");
        }
    }
}

KernelSpec KernelSpec::uniform_rbf(Index inputs, double sigma) {
    std::vector<ComponentKernel> comps;
    for (Index j = 0; j < inputs; ++j) {
        comps.push_back(ComponentKernel::rbf(sigma, j));
    }
    return KernelSpec(std::move(comps));
}

KernelSpec KernelSpec::uniform_linear(Index inputs) {
    std::vector<ComponentKernel> comps;
    for (Index j = 0; j < inputs; ++j) {
        comps.push_back(ComponentKernel::linear(j));
    }
    return KernelSpec(std::move(comps));
}

KernelSpec KernelSpec::rbf_linear_library(Index inputs, double sigma) {
    std::vector<ComponentKernel> comps;
    for (Index j = 0; j < inputs; ++j) {
        comps.push_back(ComponentKernel::rbf(sigma, j));
    }
    for (Index j = 0; j < inputs; ++j) {
        comps.push_back(ComponentKernel::linear(j));
    }
    return KernelSpec(std::move(comps));
}

Index KernelSpec::required_inputs() const {
    Index needed = 0;
    for (const auto& c : components_) {
        needed = std::max(needed, c.input + 1);
    }
    return needed;
}

KernelSpec KernelSpec::with_sigma(double sigma) const {
    auto comps = components_;
    for (auto& c : comps) {
        if (c.family == KernelFamily::Rbf) {
            c.sigma = sigma;
        }
    }
    return KernelSpec(std::move(comps));
}

KernelSpec KernelSpec::subset(const std::vector<Index>& indices) const {
    std::vector<ComponentKernel> comps;
    comps.reserve(indices.size());
    for (Index d : indices) {
        if (d < 0 || d >= size()) {
            throw InvalidArgument("KernelSpec::subset: component " + std::to_string(d + 1) + " out of range");
        }
        comps.push_back(components_[static_cast<std::size_t>(d)]);
    }
    return KernelSpec(std::move(comps));
}

Matrix component_gram(const ComponentKernel& kernel, const Matrix& rows, const Matrix& cols) {
    if (kernel.input >= rows.rows() || kernel.input >= cols.rows()) {
        throw InvalidArgument("component_gram: kernel reads input " + std::to_string(kernel.input + 1) +
                              " but data has " + std::to_string(std::min(rows.rows(), cols.rows())) + " inputs");
    }
    const RowVector u = rows.row(kernel.input);
    const RowVector v = cols.row(kernel.input);
    Matrix gram(u.size(), v.size());
    if (kernel.family == KernelFamily::Linear) {
        gram.noalias() = u.transpose() * v;
        return gram;
    }
    const double inv_s2 = 1.0 / (kernel.sigma * kernel.sigma);
    for (Index j = 0; j < v.size(); ++j) {
        for (Index i = 0; i < u.size(); ++i) {
            const double diff = u[i] - v[j];
            gram(i, j) = std::exp(-diff * diff * inv_s2);
        }
    }
    return gram;
}

namespace {

void check_inputs(const Matrix& x, const KernelSpec& spec, const char* what) {
    if (!x.allFinite()) {
        throw InvalidArgument(std::string("build_grams: non-finite value in ") + what + " inputs");
    }
    if (x.rows() < spec.required_inputs()) {
        throw InvalidArgument(std::string("build_grams: ") + what + " inputs have " + std::to_string(x.rows()) +
                              " rows but the kernel spec reads " + std::to_string(spec.required_inputs()));
    }
}

} // namespace

ComponentGrams build_grams(const Matrix& x_train, const std::optional<Matrix>& x_val, const KernelSpec& spec) {
    if (spec.size() == 0) {
        throw InvalidArgument("build_grams: empty kernel spec");
    }
    check_inputs(x_train, spec, "training");
    ComponentGrams grams;
    const Index n = x_train.cols();
    grams.train_sum = Matrix::Zero(n, n);
    grams.train.reserve(static_cast<std::size_t>(spec.size()));
    for (const auto& kernel : spec.components()) {
        Matrix g = component_gram(kernel, x_train, x_train);
        // Exact symmetry; the RBF loop above already produces it, the linear
        // outer product may differ in the last bit.
        g = 0.5 * (g + g.transpose()).eval();
        grams.train_sum += g;
        grams.train.push_back(std::move(g));
    }
    if (x_val) {
        check_inputs(*x_val, spec, "validation");
        grams.val_sum = Matrix::Zero(x_val->cols(), n);
        for (const auto& kernel : spec.components()) {
            Matrix g = component_gram(kernel, *x_val, x_train);
            grams.val_sum += g;
            grams.val.push_back(std::move(g));
        }
    }
    return grams;
}

Matrix joint_rbf_gram(const Matrix& rows, const Matrix& cols, double sigma) {
    if (!(sigma > 0.0)) {
        throw InvalidArgument("joint_rbf_gram: bandwidth must be positive");
    }
    if (rows.rows() != cols.rows()) {
        throw InvalidArgument("joint_rbf_gram: input dimension mismatch");
    }
    const double inv_s2 = 1.0 / (sigma * sigma);
    Matrix gram(rows.cols(), cols.cols());
    for (Index j = 0; j < cols.cols(); ++j) {
        for (Index i = 0; i < rows.cols(); ++i) {
            gram(i, j) = std::exp(-(rows.col(i) - cols.col(j)).squaredNorm() * inv_s2);
        }
    }
    return gram;
}

Matrix sum_zero_basis(Index n) {
    if (n < 2) {
        throw InvalidArgument("sum_zero_basis: need at least two points");
    }
    // Householder reflector H with H e_1 proportional to the ones vector; its
    // remaining columns span the orthogonal complement.
    Vector v = Vector::Ones(n);
    v[0] += std::sqrt(static_cast<double>(n));
    const double scale = 2.0 / v.squaredNorm();
    Matrix basis = -scale * (v * v.tail(n - 1).transpose());
    basis.bottomRows(n - 1).diagonal().array() += 1.0;
    return basis;
}

} // namespace cwlssvm
