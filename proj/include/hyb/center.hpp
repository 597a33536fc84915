#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hyb/group.hpp"

namespace hyb {

// Anyon ([g], R) of D(G): g the minimal-index representative, R an irrep of C_G(g).
struct Anyon {
    int index = 0;
    int cls = 0;
    int rep = 0;
    int irrep = 0;
    std::string class_label;  // "[r]"
    std::string irrep_name;   // "i"
    int qdim = 1;
    cplx spin{1.0, 0.0};

    std::string label() const;  // "([r],i)"
    std::string short_label() const;  // "[r]_i", "1_r", "1"
};

struct Center {
    GroupPtr group;
    std::vector<ConjugacyClass> classes;
    std::vector<CentralizerIrreps> centralizers;  // by class
    std::vector<Anyon> anyons;
    CMatrix S;
    CVector T;

    int size() const { return static_cast<int>(anyons.size()); }
    int find(int cls, int irrep) const;
    // Same flux, complex-conjugate centralizer character.
    int character_conjugate(int a) const;
    // Full conjugate ([g^-1], conj R).
    int dual(int a) const;
    // Verlinde multiplicity N_{ab}^c rounded to an integer.
    int fusion(int a, int b, int c) const;
    double max_fusion_deviation() const;  // distance of the Verlinde numbers from integers

private:
    friend std::shared_ptr<const Center> make_center(const GroupPtr&);
    std::vector<int> fusion_;
    double fusion_dev_ = 0.0;
};

using CenterPtr = std::shared_ptr<const Center>;

CenterPtr make_center(const GroupPtr& G);
std::vector<Anyon> anyons(const GroupPtr& G);
CMatrix s_matrix(const GroupPtr& G);

// Multiset of anyons of Z(G), or of pairs a x conj(b) in Z(G) x conj Z(G') when folded.
struct AlgebraTerm {
    int a = 0;
    int b = -1;
    int mult = 1;
};

struct AlgebraObject {
    std::string name;
    CenterPtr left;
    CenterPtr right;  // null unless folded
    std::vector<AlgebraTerm> terms;

    bool folded() const { return static_cast<bool>(right); }
    double total_dim() const;
    int ambient_order() const;
    std::string to_string() const;
};

AlgebraObject rough_lagrangian(const GroupPtr& G);
AlgebraObject smooth_lagrangian(const GroupPtr& G);

struct AlgebraReport {
    std::string name;
    double total_dim = 0.0;
    bool has_vacuum = false;
    bool spins_trivial = false;
    bool monodromy_trivial = false;  // theta_c = theta_a theta_b on condensed channels
    bool fusion_closed = false;      // a x b contains a condensed anyon
    bool integer_dim = false;
    bool lagrangian = false;         // total dim = |G| (|G||G'| folded)
    bool s_invariant = false;        // S n = n
    bool contains_subalgebra = true;
    std::vector<std::string> failures;

    bool condensable() const { return has_vacuum && spins_trivial && monodromy_trivial && fusion_closed && integer_dim; }
    bool ok_lagrangian() const { return condensable() && lagrangian && s_invariant && contains_subalgebra; }
    nlohmann::json to_json() const;
};

AlgebraReport check_condensable(const AlgebraObject& A);
// Folded Lagrangian check, including containment of sub x 1 (sub is an algebra of the left center).
AlgebraReport verify_folded_lagrangian(const AlgebraObject& listed, const AlgebraObject& sub);

class LabelError : public std::invalid_argument {
public:
    LabelError(const std::string& what, std::size_t position)
        : std::invalid_argument(what + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

struct ParsedAnyon {
    int a = 0;
    int b = -1;
};

// Single anyon ("[r]_i", "1_rs", "e^2m", "m_G") or folded pair ("E ebar").
ParsedAnyon parse_anyon_label(std::string_view text, const CenterPtr& left, const CenterPtr& right = nullptr);
// "(+)"-separated terms with optional "k*" multiplicities.
AlgebraObject parse_algebra(std::string_view text, const CenterPtr& left, const CenterPtr& right = nullptr,
                            std::string name = {});

struct FixtureAlgebra {
    std::string name;
    std::string left, right;  // group descriptors; right empty when unfolded
    std::string algebra;
    std::string subalgebra;
};
// One algebra per line: name ; G ; G' ; algebra ; subalgebra. '#' starts a comment.
std::vector<FixtureAlgebra> read_algebra_fixture(const std::string& path);

struct AnyonRow {
    std::string label, color;
    int dim = 1;
    cplx spin{1.0, 0.0};
};
// label | color | dim | T
std::vector<AnyonRow> read_anyon_fixture(const std::string& path);

nlohmann::json center_to_json(const Center& C);

}  // namespace hyb
