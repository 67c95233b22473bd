#pragma once

// Composite Hilbert spaces built from four-level ions and truncated bosonic
// modes, with sparse complex operators over them. Operators are built on a
// Basis (the full product basis or an excitation-number truncation of it);
// truncation acts as an orthogonal projection, i.e. matrix elements leaving
// the retained subspace are dropped without renormalization.
//
// All quantities are dimensionless: energies and rates are expressed in
// units of a reference rate, amplitudes are plain complex numbers.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace autoqec {

using Complex = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;
using SparseC = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<Complex>;

// Ion level indices within a four-level ion {|0>, |1>, |e>, |f>}.
inline constexpr int lvl0 = 0;
inline constexpr int lvl1 = 1;
inline constexpr int lvl_e = 2;
inline constexpr int lvl_f = 3;
inline constexpr int ion_dim = 4;

struct Factor {
    enum class Kind { Ion, Mode };
    Kind kind;
    int dim;

    static Factor ion() { return {Kind::Ion, ion_dim}; }
    static Factor mode(int max_occupation) {
        if (max_occupation < 0) throw std::invalid_argument("mode max occupation must be >= 0");
        return {Kind::Mode, max_occupation + 1};
    }
    bool operator==(const Factor& o) const { return kind == o.kind && dim == o.dim; }
};

// Ordered tensor product of factors. Factor 0 is the most significant digit
// of the composite index (Kronecker-product convention), so for three ions
// followed by modes a, b the composite index of |l1 l2 l3> |na> |nb| is
// ((((l1*4+l2)*4+l3)*da+na)*db+nb). The factor order is fixed at
// construction; operators are composable only within the same space.
class HilbertSpace {
public:
    explicit HilbertSpace(std::vector<Factor> factors) : factors_(std::move(factors)) {
        if (factors_.empty()) throw std::invalid_argument("space needs at least one factor");
        dim_ = 1;
        strides_.resize(factors_.size());
        for (int i = static_cast<int>(factors_.size()) - 1; i >= 0; --i) {
            strides_[i] = dim_;
            dim_ *= factors_[i].dim;
        }
    }

    int dim() const { return dim_; }
    int num_factors() const { return static_cast<int>(factors_.size()); }
    const Factor& factor(int i) const { return factors_.at(i); }

    int num_ions() const {
        int n = 0;
        for (const auto& f : factors_)
            if (f.kind == Factor::Kind::Ion) ++n;
        return n;
    }

    int level_at(int index, int factor_index) const {
        return (index / strides_[factor_index]) % factors_[factor_index].dim;
    }

    int index_of(const std::vector<int>& levels) const {
        if (static_cast<int>(levels.size()) != num_factors())
            throw std::invalid_argument("level list length does not match factor count");
        int idx = 0;
        for (int i = 0; i < num_factors(); ++i) {
            if (levels[i] < 0 || levels[i] >= factors_[i].dim)
                throw std::out_of_range("factor level out of range");
            idx += levels[i] * strides_[i];
        }
        return idx;
    }

    std::vector<int> levels_of(int index) const {
        std::vector<int> lv(num_factors());
        for (int i = 0; i < num_factors(); ++i) lv[i] = level_at(index, i);
        return lv;
    }

    // Number of ions in {|e>, |f>} plus the total mode occupation. Additive
    // across factors by construction.
    int excitation_number(int index) const {
        int n = 0;
        for (int i = 0; i < num_factors(); ++i) {
            int lv = level_at(index, i);
            if (factors_[i].kind == Factor::Kind::Ion) {
                if (lv == lvl_e || lv == lvl_f) ++n;
            } else {
                n += lv;
            }
        }
        return n;
    }

    std::string state_label(int index) const {
        static const char ion_chars[] = {'0', '1', 'e', 'f'};
        std::string s = "|";
        for (int i = 0; i < num_factors(); ++i) {
            int lv = level_at(index, i);
            if (factors_[i].kind == Factor::Kind::Ion)
                s += ion_chars[lv];
            else
                s += "," + std::to_string(lv);
        }
        return s + ">";
    }

    bool operator==(const HilbertSpace& o) const { return factors_ == o.factors_; }

private:
    std::vector<Factor> factors_;
    std::vector<int> strides_;
    int dim_;
};

using SpacePtr = std::shared_ptr<const HilbertSpace>;

inline SpacePtr make_space(std::vector<Factor> factors) {
    return std::make_shared<const HilbertSpace>(std::move(factors));
}

// Ordered subset of the composite basis retained after excitation-number
// truncation. Retained indices are exactly those with excitation number
// <= max_excitation, sorted ascending. Immutable after construction.
class Basis {
public:
    static std::shared_ptr<const Basis> full(SpacePtr space) {
        return truncated(std::move(space), std::numeric_limits<int>::max());
    }

    static std::shared_ptr<const Basis> truncated(SpacePtr space, int max_excitation) {
        if (max_excitation < 0)
            throw std::invalid_argument("truncation with max excitation < 0 yields an empty basis");
        return std::shared_ptr<const Basis>(new Basis(std::move(space), max_excitation));
    }

    const SpacePtr& space() const { return space_; }
    int size() const { return static_cast<int>(states_.size()); }
    int max_excitation() const { return max_excitation_; }
    int state(int pos) const { return states_.at(pos); }
    const std::vector<int>& states() const { return states_; }

    // Position of a composite index within the basis, or -1 if truncated away.
    int position(int composite_index) const {
        auto it = positions_.find(composite_index);
        return it == positions_.end() ? -1 : it->second;
    }

    std::string state_label(int pos) const { return space_->state_label(states_.at(pos)); }

    bool operator==(const Basis& o) const {
        return *space_ == *o.space_ && states_ == o.states_;
    }

private:
    Basis(SpacePtr space, int max_excitation)
        : space_(std::move(space)), max_excitation_(max_excitation) {
        for (int i = 0; i < space_->dim(); ++i) {
            if (space_->excitation_number(i) <= max_excitation_) {
                positions_.emplace(i, static_cast<int>(states_.size()));
                states_.push_back(i);
            }
        }
    }

    SpacePtr space_;
    int max_excitation_;
    std::vector<int> states_;
    std::unordered_map<int, int> positions_;
};

using BasisPtr = std::shared_ptr<const Basis>;

namespace detail {
inline void require_same_basis(const BasisPtr& a, const BasisPtr& b, const char* what) {
    if (a == b) return;
    if (!a || !b || !(*a == *b))
        throw std::invalid_argument(std::string("basis mismatch in ") + what);
}
}  // namespace detail

// Sparse complex operator over a Basis. Arithmetic requires identical bases.
// Entries are exact at double precision; nothing is dropped by magnitude.
class SparseOperator {
public:
    explicit SparseOperator(BasisPtr basis)
        : basis_(std::move(basis)), mat_(basis_->size(), basis_->size()) {}

    SparseOperator(BasisPtr basis, SparseC mat) : basis_(std::move(basis)), mat_(std::move(mat)) {
        if (mat_.rows() != basis_->size() || mat_.cols() != basis_->size())
            throw std::invalid_argument("operator dimension does not match basis");
    }

    static SparseOperator identity(BasisPtr basis) {
        SparseC m(basis->size(), basis->size());
        m.setIdentity();
        return {std::move(basis), std::move(m)};
    }

    static SparseOperator from_triplets(BasisPtr basis, const std::vector<Triplet>& trips) {
        SparseC m(basis->size(), basis->size());
        m.setFromTriplets(trips.begin(), trips.end());
        m.prune([](int, int, const Complex& v) { return v != Complex(0.0, 0.0); });
        return {std::move(basis), std::move(m)};
    }

    // Exact conversion: only entries that are exactly zero are dropped.
    static SparseOperator from_dense(BasisPtr basis, const MatrixC& dense) {
        std::vector<Triplet> trips;
        for (int c = 0; c < dense.cols(); ++c)
            for (int r = 0; r < dense.rows(); ++r)
                if (dense(r, c) != Complex(0.0, 0.0)) trips.emplace_back(r, c, dense(r, c));
        return from_triplets(std::move(basis), trips);
    }

    const BasisPtr& basis() const { return basis_; }
    const SparseC& matrix() const { return mat_; }
    int dim() const { return basis_->size(); }
    std::int64_t nonzeros() const { return mat_.nonZeros(); }

    SparseOperator adjoint() const { return {basis_, SparseC(mat_.adjoint())}; }

    bool is_hermitian(double tol = 1e-10) const {
        SparseC d = SparseC(mat_.adjoint()) - mat_;
        for (int k = 0; k < d.outerSize(); ++k)
            for (SparseC::InnerIterator it(d, k); it; ++it)
                if (std::abs(it.value()) > tol) return false;
        return true;
    }

    double max_abs() const {
        double m = 0;
        for (int k = 0; k < mat_.outerSize(); ++k)
            for (SparseC::InnerIterator it(mat_, k); it; ++it) m = std::max(m, std::abs(it.value()));
        return m;
    }

    Complex entry(int row, int col) const { return mat_.coeff(row, col); }

    SparseOperator operator+(const SparseOperator& o) const {
        detail::require_same_basis(basis_, o.basis_, "operator addition");
        return {basis_, SparseC(mat_ + o.mat_)};
    }
    SparseOperator operator-(const SparseOperator& o) const {
        detail::require_same_basis(basis_, o.basis_, "operator subtraction");
        return {basis_, SparseC(mat_ - o.mat_)};
    }
    SparseOperator operator*(const SparseOperator& o) const {
        detail::require_same_basis(basis_, o.basis_, "operator product");
        return {basis_, SparseC(mat_ * o.mat_)};
    }
    friend SparseOperator operator*(Complex s, const SparseOperator& op) {
        return {op.basis_, SparseC(s * op.mat_)};
    }
    friend SparseOperator operator*(double s, const SparseOperator& op) {
        return {op.basis_, SparseC(Complex(s, 0.0) * op.mat_)};
    }

    VectorC apply(const VectorC& v) const {
        if (v.size() != dim()) throw std::invalid_argument("vector dimension mismatch");
        return mat_ * v;
    }

private:
    BasisPtr basis_;
    SparseC mat_;
};

// State vector over a basis; physical states have unit two-norm.
class StateVector {
public:
    StateVector(BasisPtr basis, VectorC amplitudes)
        : basis_(std::move(basis)), amp_(std::move(amplitudes)) {
        if (amp_.size() != basis_->size())
            throw std::invalid_argument("state dimension does not match basis");
    }

    static StateVector basis_state(BasisPtr basis, int composite_index) {
        int pos = basis->position(composite_index);
        if (pos < 0) throw std::invalid_argument("basis state was truncated away");
        VectorC v = VectorC::Zero(basis->size());
        v(pos) = 1.0;
        return {std::move(basis), std::move(v)};
    }

    const BasisPtr& basis() const { return basis_; }
    const VectorC& amplitudes() const { return amp_; }
    VectorC& amplitudes() { return amp_; }
    int dim() const { return static_cast<int>(amp_.size()); }
    double norm() const { return amp_.norm(); }

    void validate(double tol = 1e-12) const {
        if (std::abs(norm() - 1.0) > tol)
            throw std::invalid_argument("state vector is not normalized");
    }

    StateVector normalized() const {
        double n = norm();
        if (n == 0) throw std::invalid_argument("cannot normalize the zero vector");
        return {basis_, VectorC(amp_ / n)};
    }

private:
    BasisPtr basis_;
    VectorC amp_;
};

// Dense density operator over a basis.
class DensityMatrix {
public:
    DensityMatrix(BasisPtr basis, MatrixC rho) : basis_(std::move(basis)), rho_(std::move(rho)) {
        if (rho_.rows() != basis_->size() || rho_.cols() != basis_->size())
            throw std::invalid_argument("density matrix dimension does not match basis");
    }

    static DensityMatrix pure(const StateVector& psi) {
        return {psi.basis(), MatrixC(psi.amplitudes() * psi.amplitudes().adjoint())};
    }

    static DensityMatrix maximally_mixed(BasisPtr basis) {
        int n = basis->size();
        return {std::move(basis), MatrixC(MatrixC::Identity(n, n) / static_cast<double>(n))};
    }

    const BasisPtr& basis() const { return basis_; }
    const MatrixC& matrix() const { return rho_; }
    MatrixC& matrix() { return rho_; }
    int dim() const { return static_cast<int>(rho_.rows()); }

    double trace() const { return rho_.trace().real(); }

    double hermiticity_defect() const {
        return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
    }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<MatrixC> es(0.5 * (rho_ + rho_.adjoint()),
                                                  Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    void validate(double herm_tol = 1e-10, double trace_tol = 1e-10, double psd_tol = 1e-10) const {
        if (hermiticity_defect() > herm_tol)
            throw std::invalid_argument("density matrix is not Hermitian");
        if (std::abs(trace() - 1.0) > trace_tol)
            throw std::invalid_argument("density matrix trace differs from one");
        if (min_eigenvalue() < -psd_tol)
            throw std::invalid_argument("density matrix is not positive semidefinite");
    }

    double expectation(const SparseOperator& op) const {
        detail::require_same_basis(basis_, op.basis(), "expectation value");
        return (op.matrix().cwiseProduct(rho_.transpose())).sum().real();
    }

private:
    BasisPtr basis_;
    MatrixC rho_;
};

// --- local operator blocks ------------------------------------------------

// |to><from| on a single four-level ion.
inline MatrixC ion_transition(int to, int from) {
    MatrixC m = MatrixC::Zero(ion_dim, ion_dim);
    m(to, from) = 1.0;
    return m;
}

// Pauli operators act on the ground levels {|0>, |1>} and vanish on |e>, |f>.
inline MatrixC ion_sigma_x() { return ion_transition(lvl0, lvl1) + ion_transition(lvl1, lvl0); }
inline MatrixC ion_sigma_y() {
    MatrixC m = MatrixC::Zero(ion_dim, ion_dim);
    m(lvl0, lvl1) = Complex(0, -1);
    m(lvl1, lvl0) = Complex(0, 1);
    return m;
}
// sigma_z = |0><0| - |1><1|.
inline MatrixC ion_sigma_z() { return ion_transition(lvl0, lvl0) - ion_transition(lvl1, lvl1); }
// Raising |1><0| and lowering |0><1| within the ground doublet.
inline MatrixC ion_sigma_plus() { return ion_transition(lvl1, lvl0); }
inline MatrixC ion_sigma_minus() { return ion_transition(lvl0, lvl1); }

// Hadamard-like map 0 <-> +, 1 <-> - on the ground doublet, identity on e, f.
inline MatrixC ion_ground_hadamard() {
    MatrixC m = MatrixC::Identity(ion_dim, ion_dim);
    const double s = 1.0 / std::sqrt(2.0);
    m(lvl0, lvl0) = s;
    m(lvl0, lvl1) = s;
    m(lvl1, lvl0) = s;
    m(lvl1, lvl1) = -s;
    return m;
}

// Annihilation operator of a truncated mode of dimension d (max occupation d-1).
inline MatrixC mode_annihilation(int d) {
    MatrixC m = MatrixC::Zero(d, d);
    for (int n = 1; n < d; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return m;
}

inline MatrixC mode_number(int d) {
    MatrixC m = MatrixC::Zero(d, d);
    for (int n = 0; n < d; ++n) m(n, n) = static_cast<double>(n);
    return m;
}

// --- embedding and truncation ----------------------------------------------

// Operator acting as local_op on one factor and as identity on the others,
// projected onto the given (possibly truncated) basis.
inline SparseOperator embed(const MatrixC& local_op, int factor_index, const BasisPtr& basis) {
    const auto& space = *basis->space();
    if (factor_index < 0 || factor_index >= space.num_factors())
        throw std::out_of_range("factor index out of range");
    const Factor& f = space.factor(factor_index);
    if (local_op.rows() != f.dim || local_op.cols() != f.dim)
        throw std::invalid_argument("local operator dimension does not match factor");

    // Stride of the chosen factor within composite indices.
    int stride = 1;
    for (int i = space.num_factors() - 1; i > factor_index; --i) stride *= space.factor(i).dim;

    std::vector<Triplet> trips;
    for (int pos = 0; pos < basis->size(); ++pos) {
        int src = basis->state(pos);
        int from = space.level_at(src, factor_index);
        for (int to = 0; to < f.dim; ++to) {
            Complex v = local_op(to, from);
            if (v == Complex(0.0, 0.0)) continue;
            int dst = src + (to - from) * stride;
            int dst_pos = basis->position(dst);
            if (dst_pos < 0) continue;  // leaves the truncated subspace
            trips.emplace_back(dst_pos, pos, v);
        }
    }
    return SparseOperator::from_triplets(basis, trips);
}

// Index of the i-th ion factor (0-based among ions) within the factor list.
inline int ion_factor_index(const HilbertSpace& space, int ion) {
    int seen = 0;
    for (int i = 0; i < space.num_factors(); ++i) {
        if (space.factor(i).kind == Factor::Kind::Ion) {
            if (seen == ion) return i;
            ++seen;
        }
    }
    throw std::out_of_range("ion index out of range");
}

inline int mode_factor_index(const HilbertSpace& space, int mode) {
    int seen = 0;
    for (int i = 0; i < space.num_factors(); ++i) {
        if (space.factor(i).kind == Factor::Kind::Mode) {
            if (seen == mode) return i;
            ++seen;
        }
    }
    throw std::out_of_range("mode index out of range");
}

inline SparseOperator embed_ion(const MatrixC& local_op, int ion, const BasisPtr& basis) {
    return embed(local_op, ion_factor_index(*basis->space(), ion), basis);
}

inline SparseOperator embed_mode(const MatrixC& local_op, int mode, const BasisPtr& basis) {
    return embed(local_op, mode_factor_index(*basis->space(), mode), basis);
}

// Counted ion level for projector construction.
enum class CountedLevel { Zero, One, E, F, Plus, Minus };

inline CountedLevel counted_level_from_label(char c) {
    switch (c) {
        case '0': return CountedLevel::Zero;
        case '1': return CountedLevel::One;
        case 'e': return CountedLevel::E;
        case 'f': return CountedLevel::F;
        case '+': return CountedLevel::Plus;
        case '-': return CountedLevel::Minus;
        default: throw std::invalid_argument(std::string("invalid ion level label '") + c + "'");
    }
}

// Single-ion projector |k><k| for the counted level.
inline MatrixC ion_level_projector(CountedLevel k) {
    switch (k) {
        case CountedLevel::Zero: return ion_transition(lvl0, lvl0);
        case CountedLevel::One: return ion_transition(lvl1, lvl1);
        case CountedLevel::E: return ion_transition(lvl_e, lvl_e);
        case CountedLevel::F: return ion_transition(lvl_f, lvl_f);
        case CountedLevel::Plus:
        case CountedLevel::Minus: {
            MatrixC m = MatrixC::Zero(ion_dim, ion_dim);
            double s = (k == CountedLevel::Plus) ? 1.0 : -1.0;
            m(lvl0, lvl0) = 0.5;
            m(lvl1, lvl1) = 0.5;
            m(lvl0, lvl1) = 0.5 * s;
            m(lvl1, lvl0) = 0.5 * s;
            return m;
        }
    }
    throw std::invalid_argument("invalid counted level");
}

// Orthogonal projector onto composite states with exactly `count` ions in
// level k (the other ions are unconstrained; modes are untouched).
inline SparseOperator projector_count(const BasisPtr& basis, CountedLevel k, int count) {
    int n_ions = basis->space()->num_ions();
    if (count < 0 || count > n_ions)
        throw std::invalid_argument("ion count out of range");

    MatrixC pi = ion_level_projector(k);
    MatrixC pibar = MatrixC::Identity(ion_dim, ion_dim) - pi;

    SparseOperator total(basis);
    // Sum over all subsets of ions of the requested size.
    for (std::uint32_t mask = 0; mask < (1u << n_ions); ++mask) {
        if (std::popcount(mask) != count) continue;
        SparseOperator term = SparseOperator::identity(basis);
        for (int ion = 0; ion < n_ions; ++ion) {
            bool in_set = (mask >> ion) & 1u;
            term = term * embed_ion(in_set ? pi : pibar, ion, basis);
        }
        total = total + term;
    }
    return total;
}

inline SparseOperator projector_count(const BasisPtr& basis, char level_label, int count) {
    return projector_count(basis, counted_level_from_label(level_label), count);
}

// Reprojects an operator onto a different basis over the same space (rows and
// columns outside the target basis are dropped).
inline SparseOperator restrict_to(const SparseOperator& op, const BasisPtr& target) {
    const BasisPtr& src = op.basis();
    if (!(*src->space() == *target->space()))
        throw std::invalid_argument("restrict requires bases over the same space");
    std::vector<Triplet> trips;
    const SparseC& m = op.matrix();
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseC::InnerIterator it(m, k); it; ++it) {
            int r = target->position(src->state(static_cast<int>(it.row())));
            int c = target->position(src->state(static_cast<int>(it.col())));
            if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
        }
    }
    return SparseOperator::from_triplets(target, trips);
}

}  // namespace autoqec
