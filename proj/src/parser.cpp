#include "sidesynth/parser.hpp"

#include <cctype>
#include <optional>

#include <json.hpp>

namespace sidesynth {

namespace {

// S-expression reader: atoms are bare tokens, quoted strings, or integers.
struct SExpr {
    enum class Kind { List, Symbol, String, Int } kind;
    std::string text;
    long long num = 0;
    std::vector<SExpr> items;
    int line = 1, col = 1;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    bool at_end() {
        skip_ws();
        return pos_ >= src_.size();
    }

    SExpr read() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", line_, col_);
        char c = src_[pos_];
        if (c == '(') return read_list();
        if (c == ')') throw ParseError("unexpected ')'", line_, col_);
        if (c == '"') return read_string();
        return read_token();
    }

  private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ';') {  // comment to end of line
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    SExpr read_list() {
        SExpr e;
        e.kind = SExpr::Kind::List;
        e.line = line_;
        e.col = col_;
        advance();  // '('
        while (true) {
            skip_ws();
            if (pos_ >= src_.size()) throw ParseError("unterminated list", e.line, e.col);
            if (src_[pos_] == ')') {
                advance();
                return e;
            }
            e.items.push_back(read());
        }
    }

    SExpr read_string() {
        SExpr e;
        e.kind = SExpr::Kind::String;
        e.line = line_;
        e.col = col_;
        advance();  // opening quote
        while (true) {
            if (pos_ >= src_.size()) throw ParseError("unterminated string literal", e.line, e.col);
            char c = src_[pos_];
            if (c == '"') {
                advance();
                return e;
            }
            if (c == '\\') {
                advance();
                if (pos_ >= src_.size()) throw ParseError("dangling escape", line_, col_);
                c = src_[pos_];
            }
            e.text += c;
            advance();
        }
    }

    SExpr read_token() {
        SExpr e;
        e.line = line_;
        e.col = col_;
        std::string t;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"' ||
                c == ';')
                break;
            t += c;
            advance();
        }
        bool numeric = !t.empty() && (std::isdigit(static_cast<unsigned char>(t[0])) ||
                                      (t[0] == '-' && t.size() > 1));
        if (numeric) {
            for (size_t i = 1; i < t.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(t[i]))) numeric = false;
        }
        if (numeric) {
            e.kind = SExpr::Kind::Int;
            e.num = std::stoll(t);
        } else {
            e.kind = SExpr::Kind::Symbol;
        }
        e.text = std::move(t);
        return e;
    }

    std::string_view src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

std::optional<CmpOp> cmp_from_token(const std::string& t) {
    if (t == "=") return CmpOp::Eq;
    if (t == "!=") return CmpOp::Ne;
    if (t == "<") return CmpOp::Lt;
    if (t == "<=") return CmpOp::Le;
    if (t == ">") return CmpOp::Gt;
    if (t == ">=") return CmpOp::Ge;
    return std::nullopt;
}

Term term_from_sexpr(const SExpr& e, const SymbolTable& symbols) {
    switch (e.kind) {
        case SExpr::Kind::String: return Term::str(e.text);
        case SExpr::Kind::Int: return Term::integer(e.num);
        case SExpr::Kind::Symbol:
            if (!symbols.find(e.text))
                throw ParseError("undeclared variable: " + e.text, e.line, e.col);
            return Term::var(e.text);
        case SExpr::Kind::List: break;
    }
    if (e.items.empty() || e.items[0].kind != SExpr::Kind::Symbol)
        throw ParseError("expected term", e.line, e.col);
    const std::string& head = e.items[0].text;
    if (head == "charAt") {
        if (e.items.size() != 3 || e.items[1].kind != SExpr::Kind::Symbol ||
            e.items[2].kind != SExpr::Kind::Int)
            throw ParseError("charAt expects (charAt VAR INT)", e.line, e.col);
        if (!symbols.find(e.items[1].text))
            throw ParseError("undeclared variable: " + e.items[1].text, e.line, e.col);
        if (e.items[2].num < 0) throw ParseError("charAt index must be >= 0", e.line, e.col);
        return Term::char_at(e.items[1].text, static_cast<int>(e.items[2].num));
    }
    if (head == "length") {
        if (e.items.size() != 2 || e.items[1].kind != SExpr::Kind::Symbol)
            throw ParseError("length expects (length VAR)", e.line, e.col);
        if (!symbols.find(e.items[1].text))
            throw ParseError("undeclared variable: " + e.items[1].text, e.line, e.col);
        return Term::length(e.items[1].text);
    }
    if (head == "concat") {
        if (e.items.size() != 3) throw ParseError("concat expects two terms", e.line, e.col);
        return Term::concat(term_from_sexpr(e.items[1], symbols),
                            term_from_sexpr(e.items[2], symbols));
    }
    throw ParseError("unknown term operator: " + head, e.line, e.col);
}

Constraint expr_from_sexpr(const SExpr& e, const SymbolTable& symbols) {
    if (e.kind != SExpr::Kind::List)
        throw ParseError("expected expression list", e.line, e.col);
    if (e.items.empty()) throw ParseError("empty expression", e.line, e.col);
    if (e.items[0].kind != SExpr::Kind::Symbol)
        throw ParseError("expected operator symbol", e.line, e.col);
    const std::string& head = e.items[0].text;
    if (head == "and" || head == "or") {
        std::vector<Constraint> kids;
        kids.reserve(e.items.size() - 1);
        for (size_t i = 1; i < e.items.size(); ++i)
            kids.push_back(expr_from_sexpr(e.items[i], symbols));
        return head == "and" ? Constraint::conj(std::move(kids))
                             : Constraint::disj(std::move(kids));
    }
    if (head == "not") {
        if (e.items.size() != 2) throw ParseError("not expects one argument", e.line, e.col);
        return Constraint::negate(expr_from_sexpr(e.items[1], symbols));
    }
    if (head == "eqConst") {
        if (e.items.size() != 3 || e.items[1].kind != SExpr::Kind::Symbol ||
            e.items[2].kind != SExpr::Kind::String)
            throw ParseError("eqConst expects (eqConst VAR \"literal\")", e.line, e.col);
        if (!symbols.find(e.items[1].text))
            throw ParseError("undeclared variable: " + e.items[1].text, e.line, e.col);
        return Constraint::eq_const(e.items[1].text, e.items[2].text);
    }
    if (auto op = cmp_from_token(head)) {
        if (e.items.size() != 3) throw ParseError("atom expects two terms", e.line, e.col);
        return Constraint::atom(*op, term_from_sexpr(e.items[1], symbols),
                                term_from_sexpr(e.items[2], symbols));
    }
    throw ParseError("unknown operator: " + head, e.line, e.col);
}

Var var_from_decl(const SExpr& e) {
    if (e.items.size() < 4 || e.items.size() > 5)
        throw ParseError("var expects (var NAME SORT TRACK [LENGTH])", e.line, e.col);
    Var v;
    if (e.items[1].kind != SExpr::Kind::Symbol)
        throw ParseError("var name must be a symbol", e.line, e.col);
    v.name = e.items[1].text;
    const std::string& sort = e.items[2].text;
    if (sort == "string")
        v.sort = Sort::String;
    else if (sort == "int")
        v.sort = Sort::Integer;
    else
        throw ParseError("var sort must be string or int", e.line, e.col);
    const std::string& track = e.items[3].text;
    if (track == "high")
        v.track = Track::High;
    else if (track == "low")
        v.track = Track::Low;
    else
        throw ParseError("var track must be high or low", e.line, e.col);
    if (e.items.size() == 5) {
        if (e.items[4].kind != SExpr::Kind::Int || e.items[4].num < 1)
            throw ParseError("var length must be a positive integer", e.line, e.col);
        v.length = static_cast<int>(e.items[4].num);
    }
    return v;
}

Domain domain_from_decl(const SExpr& e) {
    if (e.items.size() < 3 || e.items.size() > 4 || e.items[1].kind != SExpr::Kind::String ||
        e.items[2].kind != SExpr::Kind::Int)
        throw ParseError("domain expects (domain \"ALPHABET\" BOUND [exact|upto])", e.line, e.col);
    Domain d;
    d.alphabet = e.items[1].text;
    d.length_bound = static_cast<int>(e.items[2].num);
    if (e.items.size() == 4) {
        const std::string& mode = e.items[3].text;
        if (mode == "exact")
            d.mode = LengthMode::Exact;
        else if (mode == "upto")
            d.mode = LengthMode::UpTo;
        else
            throw ParseError("domain mode must be exact or upto", e.line, e.col);
    }
    d.validate();
    return d;
}

}  // namespace

ParsedFile parse_file(std::string_view text) {
    ParsedFile out;
    Lexer lex(text);
    while (!lex.at_end()) {
        SExpr e = lex.read();
        if (e.kind != SExpr::Kind::List || e.items.empty())
            throw ParseError("expected a declaration or formula", e.line, e.col);
        const std::string head =
            e.items[0].kind == SExpr::Kind::Symbol ? e.items[0].text : std::string();
        if (head == "domain") {
            if (out.has_domain) throw ParseError("duplicate domain declaration", e.line, e.col);
            out.domain = domain_from_decl(e);
            out.has_domain = true;
        } else if (head == "var") {
            out.symbols.declare(var_from_decl(e));
        } else if (head == "obs") {
            if (e.items.size() != 3 || e.items[1].kind != SExpr::Kind::Int)
                throw ParseError("obs expects (obs COST expr)", e.line, e.col);
            if (e.items[1].num < 0) throw ParseError("obs cost must be >= 0", e.line, e.col);
            ObsEntry entry;
            entry.cost = e.items[1].num;
            entry.constraint = expr_from_sexpr(e.items[2], out.symbols);
            out.observations.push_back(std::move(entry));
        } else {
            out.formulas.push_back(expr_from_sexpr(e, out.symbols));
        }
    }
    if (out.has_domain) {
        for (const ObsEntry& o : out.observations)
            check_well_sorted(o.constraint, out.symbols, out.domain);
        for (const Constraint& f : out.formulas) check_well_sorted(f, out.symbols, out.domain);
    }
    return out;
}

Constraint parse_constraint(std::string_view text, const SymbolTable& symbols, const Domain& d) {
    Lexer lex(text);
    SExpr e = lex.read();
    if (!lex.at_end()) throw ParseError("trailing input after expression", 0, 0);
    Constraint c = expr_from_sexpr(e, symbols);
    check_well_sorted(c, symbols, d);
    return c;
}

namespace {

using nlohmann::json;

Term term_from_json(const json& j, const SymbolTable& symbols) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (symbols.find(s)) return Term::var(s);
        return Term::str(s);
    }
    if (j.is_number_integer()) return Term::integer(j.get<long long>());
    if (!j.is_array() || j.empty() || !j[0].is_string())
        throw ValidationError("bad JSON term: " + j.dump());
    std::string head = j[0].get<std::string>();
    if (head == "charAt") return Term::char_at(j.at(1).get<std::string>(), j.at(2).get<int>());
    if (head == "length") return Term::length(j.at(1).get<std::string>());
    if (head == "concat")
        return Term::concat(term_from_json(j.at(1), symbols), term_from_json(j.at(2), symbols));
    if (head == "str") return Term::str(j.at(1).get<std::string>());
    throw ValidationError("unknown JSON term operator: " + head);
}

Constraint expr_from_json(const json& j, const SymbolTable& symbols) {
    if (!j.is_array() || j.empty() || !j[0].is_string())
        throw ValidationError("bad JSON expression: " + j.dump());
    std::string head = j[0].get<std::string>();
    if (head == "and" || head == "or") {
        std::vector<Constraint> kids;
        for (size_t i = 1; i < j.size(); ++i) kids.push_back(expr_from_json(j[i], symbols));
        return head == "and" ? Constraint::conj(std::move(kids))
                             : Constraint::disj(std::move(kids));
    }
    if (head == "not") return Constraint::negate(expr_from_json(j.at(1), symbols));
    if (head == "eqConst")
        return Constraint::eq_const(j.at(1).get<std::string>(), j.at(2).get<std::string>());
    if (auto op = cmp_from_token(head))
        return Constraint::atom(*op, term_from_json(j.at(1), symbols),
                                term_from_json(j.at(2), symbols));
    throw ValidationError("unknown JSON operator: " + head);
}

}  // namespace

ParsedFile parse_json_file(const std::string& json_text) {
    json j = json::parse(json_text);
    ParsedFile out;
    if (j.contains("domain")) {
        const json& d = j["domain"];
        out.domain.alphabet = d.at("alphabet").get<std::string>();
        out.domain.length_bound = d.at("bound").get<int>();
        std::string mode = d.value("mode", "exact");
        out.domain.mode = mode == "upto" ? LengthMode::UpTo : LengthMode::Exact;
        out.domain.validate();
        out.has_domain = true;
    }
    for (const json& v : j.value("vars", json::array())) {
        Var var;
        var.name = v.at("name").get<std::string>();
        var.sort = v.value("sort", "string") == "int" ? Sort::Integer : Sort::String;
        var.track = v.value("track", "high") == "low" ? Track::Low : Track::High;
        var.length = v.value("length", 0);
        out.symbols.declare(var);
    }
    for (const json& o : j.value("observations", json::array())) {
        ObsEntry entry;
        entry.cost = o.at("cost").get<long long>();
        entry.constraint = expr_from_json(o.at("expr"), out.symbols);
        out.observations.push_back(std::move(entry));
    }
    for (const json& f : j.value("formulas", json::array()))
        out.formulas.push_back(expr_from_json(f, out.symbols));
    if (out.has_domain) {
        for (const ObsEntry& o : out.observations)
            check_well_sorted(o.constraint, out.symbols, out.domain);
        for (const Constraint& f : out.formulas) check_well_sorted(f, out.symbols, out.domain);
    }
    return out;
}

std::string render_file(const Domain& d, const SymbolTable& symbols,
                        const std::vector<ObsEntry>& observations) {
    std::string out;
    out += "(domain \"" + d.alphabet + "\" " + std::to_string(d.length_bound) + " " +
           to_string(d.mode) + ")\n";
    for (const Var& v : symbols.all()) {
        out += "(var " + v.name + " " + to_string(v.sort) + " " + to_string(v.track);
        if (v.length > 0) out += " " + std::to_string(v.length);
        out += ")\n";
    }
    for (const ObsEntry& o : observations)
        out += "(obs " + std::to_string(o.cost) + " " + serialize(o.constraint) + ")\n";
    return out;
}

}  // namespace sidesynth
