#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hyb/lattice.hpp"

namespace hyb {

// D4 edges as a 4-dimensional qudit times a qubit: |r^j s^b> = |j>|b>.
// Error names: "Z", "X" on the qubit; "Zq", "Xq" (and powers "Zq^2", ...) on the qudit.
LocalOp qudit_x(const Layout& L, int e, int power = 1);  // |j> -> |j + power>
LocalOp qudit_z(const Layout& L, int e, int power = 1);  // i^{power j}
LocalOp qudit_c(const Layout& L, int e);                 // |j> -> |-j>
LocalOp qubit_x(const Layout& L, int e);
LocalOp qubit_z(const Layout& L, int e);
LocalOp qudit_x_controlled(const Layout& L, int e);      // X_q^{-Z}
LocalOp edge_error(const Layout& L, const std::string& name, int e);
const std::vector<std::string>& error_names();

enum class GeneratorKind { VertexR, VertexS, VertexR2, PlaquetteR, PlaquetteS, PlaquetteR2 };

std::string generator_name(GeneratorKind k);  // "A_v^(r)", "S_p^(s)", ...
GeneratorKind parse_generator_kind(const std::string& name);
bool is_vertex_kind(GeneratorKind k);
// A^(r^2), S^(r^2), S^(s): the sector whose +1 subspace makes everything commute.
bool is_sector_kind(GeneratorKind k);

struct StabilizerGenerator {
    GeneratorKind kind = GeneratorKind::VertexR;
    int site = 0;  // vertex or plaquette index
    LocalOp op;

    std::string name() const;
};

// Built from the qudit/qubit operators. Plaquette edges are taken left, top, right, bottom;
// a missing edge counts as the identity element.
StabilizerGenerator d4_generator(const Layout& L, GeneratorKind kind, int site);
// A^(r), A^(s) per vertex and S^(r), S^(s) per plaquette.
std::vector<StabilizerGenerator> d4_stabilizers(const Layout& L);

struct CommutatorCheck {
    std::string relation;
    int vertex = -1;
    int plaquette = -1;
    double deviation = 0.0;
    bool ok = false;
};

struct CommutatorReport {
    std::vector<CommutatorCheck> relations;  // the three nontrivial families
    int trivial_pairs = 0;
    int failed_trivial_pairs = 0;
    double max_deviation = 0.0;
    std::vector<std::string> failures;
    bool ok = false;

    nlohmann::json to_json() const;
};

CommutatorReport commutator_relations(const Layout& L);

struct SyndromeEntry {
    GeneratorKind kind = GeneratorKind::VertexR;
    int site = 0;
    cplx value;  // expectation value
    bool definite = false;

    bool violated() const;
};

struct SyndromeVector {
    std::vector<SyndromeEntry> entries;
    bool abelian_sector = false;

    const SyndromeEntry& at(GeneratorKind k, int site) const;
};

struct SyndromeResult {
    std::string error;
    int edge = 0;
    bool vertical = false;
    SyndromeVector syndrome;
    // Abelian sector: every violated generator. Otherwise only the violated sector generators.
    std::vector<SyndromeEntry> flagged;
    std::string anyon;  // "([id],1_r)", "([r^2],1)", "non-Abelian", ...

    std::vector<GeneratorKind> flagged_kinds() const;  // distinct, in enum order
    nlohmann::json to_json() const;
};

SyndromeVector evaluate_syndrome(const LatticeState& s);
SyndromeResult classify_syndrome(const SyndromeVector& v);
SyndromeResult syndrome_of_error(const LayoutPtr& L, const std::string& error, int edge);
SyndromeResult syndrome_of_state(const LatticeState& s);

// The patch used for the table and its canonical probe edge (the bulk vertical edge).
LayoutPtr minimal_d4_patch();
int canonical_probe_edge(const Layout& L);
int horizontal_probe_edge(const Layout& L);

// One result per error name, evaluated in parallel.
std::vector<SyndromeResult> syndrome_table(const LayoutPtr& L, int edge);

struct SyndromeRow {
    std::vector<std::string> errors;
    std::vector<GeneratorKind> flagged;
    bool abelian = false;
    std::string anyon;
};

// errors | flagged generators | abelian or non-abelian | anyon
std::vector<SyndromeRow> read_syndrome_fixture(const std::string& path);

struct RowCheck {
    std::string error;
    bool ok = false;
    std::string detail;  // first discrepancy
};

// Matches kinds, sector, anyon, and that every site touching the edge is flagged.
RowCheck check_syndrome_row(const Layout& L, const SyndromeRow& row, const SyndromeResult& r);

// error,probe,edge,abelian_sector,flagged,anyon
std::string syndrome_csv(const std::vector<SyndromeResult>& rows);

}  // namespace hyb
