#include "sidesynth/constraint.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

namespace sidesynth {

struct Term::Node {
    TermKind kind;
    std::string var;
    std::string str;
    long long num = 0;
    int index = 0;
    std::shared_ptr<const Node> lhs, rhs;
};

Term Term::var(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::VarRef;
    n->var = std::move(name);
    return Term(std::move(n));
}

Term Term::str(std::string value) {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::StrLit;
    n->str = std::move(value);
    return Term(std::move(n));
}

Term Term::integer(long long value) {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::IntLit;
    n->num = value;
    return Term(std::move(n));
}

Term Term::char_at(std::string var, int index) {
    if (index < 0) throw ValidationError("charAt index must be nonnegative");
    auto n = std::make_shared<Node>();
    n->kind = TermKind::CharAt;
    n->var = std::move(var);
    n->index = index;
    return Term(std::move(n));
}

Term Term::length(std::string var) {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::Length;
    n->var = std::move(var);
    return Term(std::move(n));
}

Term Term::concat(Term lhs, Term rhs) {
    auto n = std::make_shared<Node>();
    n->kind = TermKind::Concat;
    n->lhs = lhs.node_;
    n->rhs = rhs.node_;
    return Term(std::move(n));
}

TermKind Term::kind() const { return node_->kind; }
const std::string& Term::var_name() const { return node_->var; }
const std::string& Term::str_value() const { return node_->str; }
long long Term::int_value() const { return node_->num; }
int Term::index() const { return node_->index; }
Term Term::lhs() const { return Term(node_->lhs); }
Term Term::rhs() const { return Term(node_->rhs); }

struct Constraint::Node {
    ConstraintKind kind;
    CmpOp op = CmpOp::Eq;
    std::vector<Constraint> kids;
    std::string var;
    std::string lit;
    std::shared_ptr<Term> tl, tr;
};

Constraint::Constraint() { *this = conj({}); }

Constraint Constraint::atom(CmpOp op, Term lhs, Term rhs) {
    auto n = std::make_shared<Node>();
    n->kind = ConstraintKind::Atom;
    n->op = op;
    n->tl = std::make_shared<Term>(std::move(lhs));
    n->tr = std::make_shared<Term>(std::move(rhs));
    return Constraint(std::move(n));
}

Constraint Constraint::conj(std::vector<Constraint> children) {
    auto n = std::make_shared<Node>();
    n->kind = ConstraintKind::And;
    n->kids = std::move(children);
    return Constraint(std::move(n));
}

Constraint Constraint::disj(std::vector<Constraint> children) {
    auto n = std::make_shared<Node>();
    n->kind = ConstraintKind::Or;
    n->kids = std::move(children);
    return Constraint(std::move(n));
}

Constraint Constraint::negate(Constraint c) {
    auto n = std::make_shared<Node>();
    n->kind = ConstraintKind::Not;
    n->kids.push_back(std::move(c));
    return Constraint(std::move(n));
}

Constraint Constraint::eq_const(std::string var, std::string literal) {
    auto n = std::make_shared<Node>();
    n->kind = ConstraintKind::EqConst;
    n->var = std::move(var);
    n->lit = std::move(literal);
    return Constraint(std::move(n));
}

ConstraintKind Constraint::kind() const { return node_->kind; }
CmpOp Constraint::op() const { return node_->op; }
const Term& Constraint::lhs() const { return *node_->tl; }
const Term& Constraint::rhs() const { return *node_->tr; }
const std::vector<Constraint>& Constraint::children() const { return node_->kids; }
const std::string& Constraint::var_name() const { return node_->var; }
const std::string& Constraint::literal() const { return node_->lit; }

Constraint Constraint::and_with(const Constraint& extra) const {
    std::vector<Constraint> kids;
    if (kind() == ConstraintKind::And)
        kids = children();
    else
        kids.push_back(*this);
    kids.push_back(extra);
    return conj(std::move(kids));
}

const Var& SymbolTable::declare(Var v) {
    if (find(v.name)) throw ValidationError("duplicate variable declaration: " + v.name);
    if (v.name.empty()) throw ValidationError("variable name must be nonempty");
    vars_.push_back(std::move(v));
    return vars_.back();
}

const Var* SymbolTable::find(const std::string& name) const {
    for (const Var& v : vars_)
        if (v.name == name) return &v;
    return nullptr;
}

const Var& SymbolTable::at(const std::string& name) const {
    const Var* v = find(name);
    if (!v) throw ValidationError("undeclared variable: " + name);
    return *v;
}

namespace {

const char* op_token(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
    }
    return "?";
}

void quote_into(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
}

void serialize_into(const Term& t, std::string& out) {
    switch (t.kind()) {
        case TermKind::VarRef: out += t.var_name(); break;
        case TermKind::StrLit: quote_into(t.str_value(), out); break;
        case TermKind::IntLit: out += std::to_string(t.int_value()); break;
        case TermKind::CharAt:
            out += "(charAt ";
            out += t.var_name();
            out += ' ';
            out += std::to_string(t.index());
            out += ')';
            break;
        case TermKind::Length:
            out += "(length ";
            out += t.var_name();
            out += ')';
            break;
        case TermKind::Concat:
            out += "(concat ";
            serialize_into(t.lhs(), out);
            out += ' ';
            serialize_into(t.rhs(), out);
            out += ')';
            break;
    }
}

void serialize_into(const Constraint& c, std::string& out, bool canonical) {
    switch (c.kind()) {
        case ConstraintKind::Atom:
            out += '(';
            out += op_token(c.op());
            out += ' ';
            serialize_into(c.lhs(), out);
            out += ' ';
            serialize_into(c.rhs(), out);
            out += ')';
            break;
        case ConstraintKind::EqConst:
            out += "(eqConst ";
            out += c.var_name();
            out += ' ';
            quote_into(c.literal(), out);
            out += ')';
            break;
        case ConstraintKind::Not:
            out += "(not ";
            serialize_into(c.children().front(), out, canonical);
            out += ')';
            break;
        case ConstraintKind::And:
        case ConstraintKind::Or: {
            out += c.kind() == ConstraintKind::And ? "(and" : "(or";
            std::vector<std::string> parts;
            parts.reserve(c.children().size());
            for (const Constraint& k : c.children()) {
                std::string p;
                serialize_into(k, p, canonical);
                parts.push_back(std::move(p));
            }
            // Canonical keys are order-independent for and/or.
            if (canonical) std::sort(parts.begin(), parts.end());
            for (const std::string& p : parts) {
                out += ' ';
                out += p;
            }
            out += ')';
            break;
        }
    }
}

void collect_term_vars(const Term& t, std::set<std::string>& out) {
    switch (t.kind()) {
        case TermKind::VarRef:
        case TermKind::CharAt:
        case TermKind::Length: out.insert(t.var_name()); break;
        case TermKind::Concat:
            collect_term_vars(t.lhs(), out);
            collect_term_vars(t.rhs(), out);
            break;
        default: break;
    }
}

void collect_vars(const Constraint& c, std::set<std::string>& out) {
    switch (c.kind()) {
        case ConstraintKind::Atom:
            collect_term_vars(c.lhs(), out);
            collect_term_vars(c.rhs(), out);
            break;
        case ConstraintKind::EqConst: out.insert(c.var_name()); break;
        default:
            for (const Constraint& k : c.children()) collect_vars(k, out);
            break;
    }
}

// nullopt marks an undefined replacement (out-of-range charAt); the enclosing
// atom is then false.
std::optional<Term> substitute_term(const Term& t, const Var& v, const std::string& value) {
    switch (t.kind()) {
        case TermKind::VarRef: return t.var_name() == v.name ? Term::str(value) : t;
        case TermKind::CharAt:
            if (t.var_name() != v.name) return t;
            if (t.index() >= static_cast<int>(value.size())) return std::nullopt;
            return Term::str(std::string(1, value[t.index()]));
        case TermKind::Length:
            return t.var_name() == v.name ? Term::integer(static_cast<long long>(value.size()))
                                          : t;
        case TermKind::Concat: {
            auto a = substitute_term(t.lhs(), v, value);
            auto b = substitute_term(t.rhs(), v, value);
            if (!a || !b) return std::nullopt;
            return Term::concat(std::move(*a), std::move(*b));
        }
        default: return t;
    }
}

Constraint substitute_node(const Constraint& c, const Var& v, const std::string& value) {
    switch (c.kind()) {
        case ConstraintKind::Atom: {
            auto lhs = substitute_term(c.lhs(), v, value);
            auto rhs = substitute_term(c.rhs(), v, value);
            if (!lhs || !rhs) return Constraint::falsity();
            return Constraint::atom(c.op(), std::move(*lhs), std::move(*rhs));
        }
        case ConstraintKind::EqConst:
            if (c.var_name() != v.name) return c;
            return c.literal() == value ? Constraint::truth() : Constraint::falsity();
        case ConstraintKind::Not: return Constraint::negate(substitute_node(c.children()[0], v, value));
        case ConstraintKind::And:
        case ConstraintKind::Or: {
            std::vector<Constraint> kids;
            kids.reserve(c.children().size());
            for (const Constraint& k : c.children()) kids.push_back(substitute_node(k, v, value));
            return c.kind() == ConstraintKind::And ? Constraint::conj(std::move(kids))
                                                   : Constraint::disj(std::move(kids));
        }
    }
    return c;
}

enum class TermSort { Str, Chr, Int };

TermSort term_sort(const Term& t, const SymbolTable& symbols) {
    switch (t.kind()) {
        case TermKind::VarRef: {
            const Var& v = symbols.at(t.var_name());
            return v.sort == Sort::String ? TermSort::Str : TermSort::Int;
        }
        case TermKind::StrLit: return TermSort::Str;
        case TermKind::IntLit: return TermSort::Int;
        case TermKind::CharAt: {
            const Var& v = symbols.at(t.var_name());
            if (v.sort != Sort::String) throw SortError("charAt over non-string " + v.name);
            return TermSort::Chr;
        }
        case TermKind::Length: {
            const Var& v = symbols.at(t.var_name());
            if (v.sort != Sort::String) throw SortError("length over non-string " + v.name);
            return TermSort::Int;
        }
        case TermKind::Concat: {
            TermSort a = term_sort(t.lhs(), symbols);
            TermSort b = term_sort(t.rhs(), symbols);
            if (a != TermSort::Str || b != TermSort::Str)
                throw SortError("concat requires string operands");
            return TermSort::Str;
        }
    }
    throw SortError("unknown term");
}

void check_literals(const Term& t, const Domain& d) {
    if (t.kind() == TermKind::StrLit) {
        for (char c : t.str_value())
            if (!d.contains(c))
                throw ValidationError("string literal \"" + t.str_value() +
                                      "\" uses symbols outside the alphabet");
    } else if (t.kind() == TermKind::Concat) {
        check_literals(t.lhs(), d);
        check_literals(t.rhs(), d);
    }
}

void check_atom(const Constraint& c, const SymbolTable& symbols, const Domain& d) {
    TermSort a = term_sort(c.lhs(), symbols);
    TermSort b = term_sort(c.rhs(), symbols);
    auto is_char_compatible = [](const Term& t, TermSort s) {
        return s == TermSort::Chr || (s == TermSort::Str && t.kind() == TermKind::StrLit &&
                                      t.str_value().size() == 1);
    };
    bool ok = (a == b && a != TermSort::Chr) || (a == TermSort::Chr && a == b);
    if (!ok) {
        // A one-symbol string literal is accepted where a character is expected.
        if ((a == TermSort::Chr && is_char_compatible(c.rhs(), b)) ||
            (b == TermSort::Chr && is_char_compatible(c.lhs(), a)))
            ok = true;
    }
    if (!ok) throw SortError("ill-sorted atom: " + serialize(c));
    check_literals(c.lhs(), d);
    check_literals(c.rhs(), d);
}

}  // namespace

std::string serialize(const Term& t) {
    std::string out;
    serialize_into(t, out);
    return out;
}

std::string serialize(const Constraint& c) {
    std::string out;
    serialize_into(c, out, /*canonical=*/false);
    return out;
}

std::string canonical_key(const Constraint& c) {
    std::string out;
    serialize_into(c, out, /*canonical=*/true);
    return out;
}

std::vector<std::string> free_variables(const Constraint& c) {
    std::set<std::string> vars;
    collect_vars(c, vars);
    return {vars.begin(), vars.end()};
}

Constraint substitute(const Constraint& c, const Var& v, const std::string& value,
                      const Domain& d) {
    if (v.sort != Sort::String) throw ValidationError("substitute expects a string variable");
    check_value_in_domain(value, v, d);
    return substitute_node(c, v, value);
}

void check_well_sorted(const Constraint& c, const SymbolTable& symbols, const Domain& d) {
    switch (c.kind()) {
        case ConstraintKind::Atom: check_atom(c, symbols, d); break;
        case ConstraintKind::EqConst: {
            const Var& v = symbols.at(c.var_name());
            if (v.sort != Sort::String) throw SortError("eqConst over non-string " + v.name);
            for (char ch : c.literal())
                if (!d.contains(ch))
                    throw ValidationError("eqConst literal outside alphabet: " + c.literal());
            break;
        }
        default:
            for (const Constraint& k : c.children()) check_well_sorted(k, symbols, d);
            break;
    }
}

}  // namespace sidesynth
