#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hyb {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kTol = 1e-10;
inline constexpr int kDefaultOrderCap = 128;

// Parsed form of "Z<n>", "D<k>", "S3", "A x B".
struct GroupDescriptor {
    enum class Kind { Cyclic, Dihedral, Symmetric3, Product };
    Kind kind = Kind::Cyclic;
    int n = 1;  // cyclic order, or dihedral half-order k
    std::vector<GroupDescriptor> factors;

    static GroupDescriptor cyclic(int n);
    static GroupDescriptor dihedral(int k);
    static GroupDescriptor symmetric3();
    static GroupDescriptor product(GroupDescriptor a, GroupDescriptor b);

    std::string to_string() const;
    int order() const;
};

GroupDescriptor parse_group_descriptor(std::string_view text);

class FiniteGroup;
using GroupPtr = std::shared_ptr<const FiniteGroup>;

class FiniteGroup {
public:
    int order() const { return order_; }
    int mul(int a, int b) const { return mul_[a * order_ + b]; }
    int inv(int a) const { return inv_[a]; }
    int conj(int x, int g) const { return mul(mul(x, g), inv(x)); }  // x g x^-1
    int power(int g, int e) const;
    int element_order(int g) const;
    const std::string& label(int g) const { return labels_[g]; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::optional<int> find(std::string_view label) const;
    int element(std::string_view label) const;  // throws on unknown label

    const GroupDescriptor& descriptor() const { return desc_; }
    std::string name() const { return desc_.to_string(); }
    bool is_abelian() const;

    // Product structure; valid only for Kind::Product.
    const GroupPtr& factor(int i) const { return factors_.at(i); }
    std::pair<int, int> split(int g) const;
    int combine(int a, int b) const;

    // Dihedral structure r^a s^b (D<k> and S3); valid only for those kinds.
    int rotation_order() const { return desc_.n; }
    int dihedral(int a, int b) const;
    std::pair<int, int> dihedral_parts(int g) const;
    bool is_dihedral_like() const;

    bool is_central(int g) const;

    friend GroupPtr build_group(const GroupDescriptor&, int cap);
    friend GroupPtr make_product(const GroupPtr&, const GroupPtr&, int cap);

private:
    int order_ = 0;
    std::vector<int> mul_, inv_;
    std::vector<std::string> labels_;
    GroupDescriptor desc_;
    std::vector<GroupPtr> factors_;
};

GroupPtr build_group(const GroupDescriptor& desc, int cap = kDefaultOrderCap);
GroupPtr parse_group(std::string_view text, int cap = kDefaultOrderCap);
GroupPtr make_product(const GroupPtr& a, const GroupPtr& b, int cap = kDefaultOrderCap);

// Exhaustive associativity / identity / inverse check.
bool check_group_axioms(const FiniteGroup& G, std::string* why = nullptr);

struct Subgroup {
    GroupPtr parent;
    std::vector<int> members;  // sorted, contains 0

    int size() const { return static_cast<int>(members.size()); }
    bool contains(int g) const;
    int position(int g) const;  // index into members, -1 if absent
};

Subgroup whole_group(const GroupPtr& G);
Subgroup trivial_subgroup(const GroupPtr& G);
Subgroup generated_subgroup(const GroupPtr& G, const std::vector<int>& gens);
Subgroup make_subgroup(const GroupPtr& G, std::vector<int> members);  // validates closure
bool is_normal(const Subgroup& N, const Subgroup& K);

using ConjugacyClass = std::vector<int>;

// Classes ordered by (size, minimal index); identity class first.
std::vector<ConjugacyClass> conjugacy_classes(const FiniteGroup& G);
int class_of(const std::vector<ConjugacyClass>& classes, int g);
Subgroup centralizer(const GroupPtr& G, int g);

struct GroupHom {
    Subgroup source;
    GroupPtr target;
    std::vector<int> map;  // indexed by parent element; -1 outside source

    int operator()(int h) const { return map.at(h); }
    Subgroup kernel() const;
};

// Builds p from generator images by closure; throws if p is not well defined.
GroupHom hom_from_generators(const GroupPtr& G, const std::vector<std::pair<int, int>>& gen_images,
                             const GroupPtr& target);

struct DiagonalSubgroup {
    GroupPtr left, right;
    Subgroup K;
    GroupHom p;
    std::vector<std::pair<int, int>> pairs;  // (h, p(h)) in K order

    int size() const { return static_cast<int>(pairs.size()); }
    bool factorizes() const;  // equals K1 x K2 for subgroups of each factor
};

DiagonalSubgroup diagonal_subgroup(const GroupPtr& G, const GroupPtr& Gp, const Subgroup& K,
                                   const GroupHom& p);
// Convenience: K^diag generated by pairs (h, p(h)).
DiagonalSubgroup diagonal_from_generators(const GroupPtr& G, const GroupPtr& Gp,
                                          const std::vector<std::pair<int, int>>& gens);
DiagonalSubgroup trivial_diagonal(const GroupPtr& G, const GroupPtr& Gp);

struct Cocycle2 {
    Subgroup domain;
    std::vector<cplx> values;  // |K| x |K| by member position

    cplx operator()(int g, int h) const;
    static Cocycle2 trivial(const Subgroup& K);
    bool is_trivial(double tol = kTol) const;
};

struct CocycleReport {
    struct Check {
        std::string name;
        bool passed = true;
        std::string witness;
    };
    std::vector<Check> checks;
    bool ok() const;
    std::string summary() const;
};

CocycleReport verify_cocycle(const Cocycle2& phi, double tol = kTol);

struct Irrep {
    std::string name;
    int dim = 1;
    Subgroup domain;
    std::vector<CMatrix> mats;  // by member position of domain

    const CMatrix& at(int g) const { return mats.at(domain.position(g)); }
    cplx character(int g) const { return at(g).trace(); }
};

// Complete irreps: 1-dimensional first, trivial first.
std::vector<Irrep> irreps(const GroupPtr& G);

// Irreps of C_G(g), named as in the anyon labels (e.g. "i", "+-", "E").
struct CentralizerIrreps {
    Subgroup centralizer;
    std::vector<Irrep> irreps;
};
CentralizerIrreps centralizer_irreps(const GroupPtr& G, int g);

// Schur orthogonality and sum-of-squares checks; returns the worst deviation.
double schur_deviation(const std::vector<Irrep>& reps);

}  // namespace hyb
