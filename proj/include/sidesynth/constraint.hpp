#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sidesynth/domain.hpp"

namespace sidesynth {

enum class TermKind { VarRef, StrLit, IntLit, CharAt, Length, Concat };

// Immutable term tree. Values share nodes freely; never mutated after build.
class Term {
  public:
    static Term var(std::string name);
    static Term str(std::string value);
    static Term integer(long long value);
    static Term char_at(std::string var, int index);
    static Term length(std::string var);
    static Term concat(Term lhs, Term rhs);

    TermKind kind() const;
    const std::string& var_name() const;
    const std::string& str_value() const;
    long long int_value() const;
    int index() const;
    Term lhs() const;
    Term rhs() const;

  private:
    struct Node;
    std::shared_ptr<const Node> node_;
    explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
enum class ConstraintKind { Atom, And, Or, Not, EqConst };

// Immutable constraint AST. `(and)` is the true constraint, `(or)` is false.
// EqConst is the marker atom for pinning a variable to a literal string; it is
// semantically identical to an equality atom but kept as its own node so the
// incremental counter can recognize the l = l_val conjunct.
class Constraint {
  public:
    Constraint();  // true
    static Constraint atom(CmpOp op, Term lhs, Term rhs);
    static Constraint conj(std::vector<Constraint> children);
    static Constraint disj(std::vector<Constraint> children);
    static Constraint negate(Constraint c);
    static Constraint eq_const(std::string var, std::string literal);
    static Constraint truth() { return conj({}); }
    static Constraint falsity() { return disj({}); }

    ConstraintKind kind() const;
    CmpOp op() const;
    const Term& lhs() const;
    const Term& rhs() const;
    const std::vector<Constraint>& children() const;
    const std::string& var_name() const;
    const std::string& literal() const;

    bool is_true() const { return kind() == ConstraintKind::And && children().empty(); }

    // Appends one conjunct; (and c d) with flat children. Used by the attack
    // loop to grow C_h.
    Constraint and_with(const Constraint& extra) const;

  private:
    struct Node;
    std::shared_ptr<const Node> node_;
    explicit Constraint(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
};

// Declared variables of one constraint system. Names are unique.
class SymbolTable {
  public:
    const Var& declare(Var v);
    const Var* find(const std::string& name) const;
    const Var& at(const std::string& name) const;  // throws ValidationError
    const std::vector<Var>& all() const { return vars_; }
    bool empty() const { return vars_.empty(); }

  private:
    std::vector<Var> vars_;
};

// Display form; parse(serialize(c)) reproduces c structurally.
std::string serialize(const Term& t);
std::string serialize(const Constraint& c);

// Deterministic key, invariant under commutativity of and/or children.
std::string canonical_key(const Constraint& c);

// Sorted, duplicate-free variable names occurring in c.
std::vector<std::string> free_variables(const Constraint& c);

// Replaces v by the literal `value` everywhere (charAt/length folded to
// literals). Validates the value against the domain first.
Constraint substitute(const Constraint& c, const Var& v, const std::string& value,
                      const Domain& d);

// Throws SortError / ValidationError on ill-sorted or undeclared constructs.
void check_well_sorted(const Constraint& c, const SymbolTable& symbols, const Domain& d);

}  // namespace sidesynth
