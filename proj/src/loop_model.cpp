// Analysis front end for the restricted loop language and its structured
// descriptor form. The language keeps loop bounds constant and subscripts
// affine in loop variables, so the parallelizability check is exact:
// a loop is parallelizable iff it carries no @seq annotation and no variable
// written in its subtree can alias another iteration's access. Anything the
// rule cannot prove independent is marked sequential.

#include "offload/loop_model.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "offload/errors.hpp"
#include <json.hpp>

namespace offload {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

// --- tokenizer -------------------------------------------------------------

enum class Tok {
    kIdent,
    kNumber,
    kFor,
    kPunct,      // one of ( ) { } [ ] ; = + - * / < ++ +=
    kAnnotation, // @seq / @ops(k) / @bytes(k)
    kEnd,
};

struct Token {
    Tok kind = Tok::kEnd;
    std::string text;
    std::int64_t int_value = 0;
    bool is_integer = false;
    int line = 0;
    int col = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_space_and_comments();
        Token t;
        t.line = line_;
        t.col = col_;
        if (pos_ >= text_.size()) {
            t.kind = Tok::kEnd;
            return t;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string ident;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ident += advance();
            }
            t.kind = ident == "for" ? Tok::kFor : Tok::kIdent;
            t.text = ident;
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            bool integer = true;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
                if (text_[pos_] == '.') integer = false;
                num += advance();
            }
            t.kind = Tok::kNumber;
            t.text = num;
            t.is_integer = integer;
            if (integer) t.int_value = std::stoll(num);
            return t;
        }
        if (c == '+' && pos_ + 1 < text_.size() && (text_[pos_ + 1] == '+' || text_[pos_ + 1] == '=')) {
            t.kind = Tok::kPunct;
            t.text.push_back(advance());
            t.text.push_back(advance());
            return t;
        }
        if (std::string("(){}[];=+-*/<").find(c) != std::string::npos) {
            t.kind = Tok::kPunct;
            t.text.push_back(advance());
            return t;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }

private:
    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space_and_comments() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
                if (pos_ + 2 < text_.size() && text_[pos_ + 2] == '@') {
                    return;  // annotation, lexed by next()
                }
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                return;
            }
        }
    }

    friend class LexerAnnotations;

public:
    // Annotations start with "//@"; next() stops right before them.
    bool at_annotation() const {
        return pos_ + 2 < text_.size() && text_[pos_] == '/' && text_[pos_ + 1] == '/' &&
               text_[pos_ + 2] == '@';
    }

    Token lex_annotation() {
        Token t;
        t.kind = Tok::kAnnotation;
        t.line = line_;
        t.col = col_;
        advance();  // /
        advance();  // /
        advance();  // @
        while (pos_ < text_.size() && text_[pos_] != '\n') t.text += advance();
        while (!t.text.empty() && std::isspace(static_cast<unsigned char>(t.text.back()))) {
            t.text.pop_back();
        }
        return t;
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// --- parse tree ------------------------------------------------------------

struct Subscript {
    bool is_const = false;
    std::int64_t constant = 0;
    std::string var;          // loop variable when !is_const
    std::int64_t offset = 0;  // var + offset

    bool operator==(const Subscript&) const = default;
};

struct Access {
    std::string var;
    std::vector<Subscript> subs;
    bool is_write = false;
};

struct VarDecl {
    std::int64_t elem_size = 0;
    std::vector<std::int64_t> dims;
    std::int64_t total_size = 0;
};

struct LoopNode {
    int id = 0;
    std::string var;
    std::int64_t trip = 0;
    bool seq_annotated = false;
    std::optional<std::int64_t> ops_override;
    std::optional<std::int64_t> bytes_override;
    std::vector<Access> accesses;            // direct body statements only
    std::int64_t direct_ops = 0;
    std::vector<int> children;
    std::optional<int> parent;
    int depth = 0;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lexer_(text) { shift(); }

    LoopProgram parse() {
        while (cur_.kind != Tok::kEnd) {
            if (cur_.kind == Tok::kAnnotation || lexer_.at_annotation()) {
                collect_annotations();
                expect_for();
                parse_loop(std::nullopt, 0);
            } else if (cur_.kind == Tok::kFor) {
                parse_loop(std::nullopt, 0);
            } else if (cur_.kind == Tok::kIdent) {
                parse_decl();
            } else {
                throw ParseError("expected declaration or for loop, got '" + cur_.text + "'",
                                 cur_.line, cur_.col);
            }
        }
        return build();
    }

private:
    void shift() {
        if (lexer_.at_annotation()) {
            cur_ = lexer_.lex_annotation();
        } else {
            cur_ = lexer_.next();
        }
    }

    bool accept_punct(const std::string& p) {
        if (cur_.kind == Tok::kPunct && cur_.text == p) {
            shift();
            return true;
        }
        return false;
    }

    void expect_punct(const std::string& p) {
        if (!accept_punct(p)) {
            throw ParseError("expected '" + p + "', got '" + cur_.text + "'", cur_.line, cur_.col);
        }
    }

    std::string expect_ident() {
        if (cur_.kind != Tok::kIdent) {
            throw ParseError("expected identifier, got '" + cur_.text + "'", cur_.line, cur_.col);
        }
        std::string name = cur_.text;
        shift();
        return name;
    }

    std::int64_t expect_int() {
        if (cur_.kind != Tok::kNumber || !cur_.is_integer) {
            throw ParseError("expected integer constant, got '" + cur_.text + "'", cur_.line,
                             cur_.col);
        }
        std::int64_t v = cur_.int_value;
        shift();
        return v;
    }

    void expect_for() {
        if (cur_.kind != Tok::kFor) {
            throw ParseError("annotation must precede a for loop", cur_.line, cur_.col);
        }
    }

    void collect_annotations() {
        pending_seq_ = false;
        pending_ops_.reset();
        pending_bytes_.reset();
        while (cur_.kind == Tok::kAnnotation) {
            const std::string& a = cur_.text;
            if (a == "seq") {
                pending_seq_ = true;
            } else if (a.rfind("ops(", 0) == 0 && a.back() == ')') {
                pending_ops_ = parse_annotation_int(a.substr(4, a.size() - 5));
            } else if (a.rfind("bytes(", 0) == 0 && a.back() == ')') {
                pending_bytes_ = parse_annotation_int(a.substr(6, a.size() - 7));
            } else {
                throw ParseError("unknown annotation '@" + a + "'", cur_.line, cur_.col);
            }
            shift();
        }
    }

    std::int64_t parse_annotation_int(const std::string& s) {
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) {
                return std::isdigit(static_cast<unsigned char>(c));
            })) {
            throw ParseError("annotation argument must be a non-negative integer", cur_.line,
                             cur_.col);
        }
        return std::stoll(s);
    }

    void parse_decl() {
        static const std::map<std::string, std::int64_t> kTypeSizes = {
            {"char", 1}, {"int", 4}, {"float", 4}, {"long", 8}, {"double", 8}};
        auto it = kTypeSizes.find(cur_.text);
        if (it == kTypeSizes.end()) {
            throw ParseError("unknown type '" + cur_.text + "'", cur_.line, cur_.col);
        }
        shift();
        std::string name = expect_ident();
        if (decls_.count(name)) {
            throw ParseError("redeclaration of '" + name + "'", cur_.line, cur_.col);
        }
        VarDecl d;
        d.elem_size = it->second;
        while (accept_punct("[")) {
            std::int64_t dim = expect_int();
            if (dim < 1) throw ParseError("array dimension must be >= 1", cur_.line, cur_.col);
            d.dims.push_back(dim);
            expect_punct("]");
        }
        expect_punct(";");
        d.total_size = d.elem_size;
        for (std::int64_t dim : d.dims) d.total_size *= dim;
        decls_[name] = d;
    }

    int parse_loop(std::optional<int> parent, int depth) {
        bool seq = pending_seq_;
        auto ops_override = pending_ops_;
        auto bytes_override = pending_bytes_;
        pending_seq_ = false;
        pending_ops_.reset();
        pending_bytes_.reset();

        int head_line = cur_.line;
        int head_col = cur_.col;
        shift();  // for
        expect_punct("(");
        std::string var = expect_ident();
        if (decls_.count(var)) {
            throw ParseError("loop variable '" + var + "' shadows a declared variable", head_line,
                             head_col);
        }
        for (const auto& v : loop_var_stack_) {
            if (v == var) {
                throw ParseError("loop variable '" + var + "' shadows an enclosing loop variable",
                                 head_line, head_col);
            }
        }
        expect_punct("=");
        if (expect_int() != 0) {
            throw ParseError("loop must start at 0", head_line, head_col);
        }
        expect_punct(";");
        std::string cond_var = expect_ident();
        if (cond_var != var) {
            throw ParseError("loop condition must test the loop variable", head_line, head_col);
        }
        expect_punct("<");
        if (cur_.kind == Tok::kIdent) {
            throw ParseError("trip count is not a compile-time constant: '" + cur_.text + "'",
                             cur_.line, cur_.col);
        }
        std::int64_t trip = expect_int();
        if (trip < 1) throw ParseError("trip count must be >= 1", head_line, head_col);
        expect_punct(";");
        std::string inc_var = expect_ident();
        if (inc_var != var) {
            throw ParseError("loop increment must step the loop variable", head_line, head_col);
        }
        expect_punct("++");
        expect_punct(")");
        expect_punct("{");

        int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[id].id = id;
        nodes_[id].var = var;
        nodes_[id].trip = trip;
        nodes_[id].seq_annotated = seq;
        nodes_[id].ops_override = ops_override;
        nodes_[id].bytes_override = bytes_override;
        nodes_[id].parent = parent;
        nodes_[id].depth = depth;
        if (parent) nodes_[*parent].children.push_back(id);

        loop_var_stack_.push_back(var);
        while (!accept_punct("}")) {
            if (cur_.kind == Tok::kEnd) {
                throw ParseError("unterminated loop body", head_line, head_col);
            }
            if (cur_.kind == Tok::kAnnotation) {
                collect_annotations();
                expect_for();
                parse_loop(id, depth + 1);
            } else if (cur_.kind == Tok::kFor) {
                parse_loop(id, depth + 1);
            } else {
                parse_statement(id);
            }
        }
        loop_var_stack_.pop_back();
        return id;
    }

    void parse_statement(int loop_id) {
        Access lhs = parse_ref();
        lhs.is_write = true;
        bool compound = false;
        if (accept_punct("+=")) {
            compound = true;
        } else {
            expect_punct("=");
        }
        std::int64_t ops = compound ? 1 : 0;
        parse_expr(loop_id, ops);
        expect_punct(";");

        LoopNode& node = nodes_[loop_id];
        node.direct_ops += ops;
        node.accesses.push_back(lhs);
        if (compound) {
            Access read = lhs;
            read.is_write = false;
            node.accesses.push_back(read);
        }
    }

    // ref := ident ('[' index ']')*, checked against the declaration arity
    Access parse_ref() {
        int line = cur_.line, col = cur_.col;
        std::string name = expect_ident();
        Access a;
        a.var = name;
        while (cur_.kind == Tok::kPunct && cur_.text == "[") {
            shift();
            a.subs.push_back(parse_subscript());
            expect_punct("]");
        }
        auto it = decls_.find(name);
        if (it == decls_.end()) {
            throw ParseError("undeclared variable '" + name + "'", line, col);
        }
        if (a.subs.size() != it->second.dims.size()) {
            throw ParseError("'" + name + "' expects " + std::to_string(it->second.dims.size()) +
                                 " subscripts, got " + std::to_string(a.subs.size()),
                             line, col);
        }
        return a;
    }

    Subscript parse_subscript() {
        Subscript s;
        if (cur_.kind == Tok::kNumber) {
            s.is_const = true;
            s.constant = expect_int();
            return s;
        }
        int line = cur_.line, col = cur_.col;
        std::string name = expect_ident();
        if (!is_loop_var(name)) {
            throw ParseError("subscript must be a loop variable or constant, got '" + name + "'",
                             line, col);
        }
        s.var = name;
        if (cur_.kind == Tok::kPunct && (cur_.text == "+" || cur_.text == "-")) {
            bool neg = cur_.text == "-";
            shift();
            std::int64_t k = expect_int();
            s.offset = neg ? -k : k;
        }
        return s;
    }

    void parse_expr(int loop_id, std::int64_t& ops) {
        parse_term(loop_id, ops);
        while (cur_.kind == Tok::kPunct && (cur_.text == "+" || cur_.text == "-")) {
            shift();
            ++ops;
            parse_term(loop_id, ops);
        }
    }

    void parse_term(int loop_id, std::int64_t& ops) {
        parse_factor(loop_id, ops);
        while (cur_.kind == Tok::kPunct && (cur_.text == "*" || cur_.text == "/")) {
            shift();
            ++ops;
            parse_factor(loop_id, ops);
        }
    }

    void parse_factor(int loop_id, std::int64_t& ops) {
        if (cur_.kind == Tok::kNumber) {
            shift();
            return;
        }
        if (accept_punct("(")) {
            parse_expr(loop_id, ops);
            expect_punct(")");
            return;
        }
        if (cur_.kind == Tok::kIdent) {
            if (is_loop_var(cur_.text)) {
                shift();  // loop counter used as a value; not a memory access
                return;
            }
            Access a = parse_ref();
            a.is_write = false;
            nodes_[loop_id].accesses.push_back(a);
            return;
        }
        throw ParseError("expected operand, got '" + cur_.text + "'", cur_.line, cur_.col);
    }

    bool is_loop_var(const std::string& name) const {
        return std::find(loop_var_stack_.begin(), loop_var_stack_.end(), name) !=
               loop_var_stack_.end();
    }

    // --- semantic pass ------------------------------------------------------

    LoopProgram build() {
        LoopProgram program;
        for (const auto& [name, decl] : decls_) {
            program.variables[name] = decl.total_size;
        }
        program.loops.resize(nodes_.size());
        for (const LoopNode& n : nodes_) {
            LoopStatement& ls = program.loops[n.id];
            ls.id = n.id;
            ls.parent = n.parent;
            ls.depth = n.depth;
            ls.trip_count = n.trip;
            ls.ops_per_iter = n.ops_override.value_or(n.direct_ops);
            ls.bytes_per_iter = n.bytes_override.value_or(default_bytes(n));
            for (const Access& a : n.accesses) {
                (a.is_write ? ls.writes : ls.reads).insert(a.var);
            }
            ls.parallelizable = !n.seq_annotated && dependence_free(n);
        }
        program.source_digest = compute_digest(program);
        return program;
    }

    std::int64_t default_bytes(const LoopNode& n) const {
        std::vector<const Access*> distinct;
        std::int64_t bytes = 0;
        for (const Access& a : n.accesses) {
            bool seen = false;
            for (const Access* d : distinct) {
                if (d->var == a.var && d->subs == a.subs) {
                    seen = true;
                    break;
                }
            }
            if (seen) continue;
            distinct.push_back(&a);
            bytes += decls_.at(a.var).elem_size;
        }
        return bytes;
    }

    void collect_subtree_accesses(const LoopNode& n, std::vector<const Access*>& out) const {
        for (const Access& a : n.accesses) out.push_back(&a);
        for (int child : n.children) collect_subtree_accesses(nodes_[child], out);
    }

    // Exact for this language: subscripts are affine in loop variables, so two
    // iterations of `loop` can only touch the same element of a written array
    // if some access pair disagrees on a subscript, or a write subscript does
    // not advance with the loop variable at all.
    bool dependence_free(const LoopNode& loop) const {
        std::vector<const Access*> accesses;
        collect_subtree_accesses(loop, accesses);
        for (const Access* w : accesses) {
            if (!w->is_write) continue;
            if (decls_.at(w->var).dims.empty()) {
                return false;  // scalar write: carried across iterations
            }
            bool uses_loop_var = std::any_of(w->subs.begin(), w->subs.end(),
                                             [&](const Subscript& s) {
                                                 return !s.is_const && s.var == loop.var;
                                             });
            if (!uses_loop_var) {
                return false;  // same element written by every iteration
            }
            for (const Access* other : accesses) {
                if (other == w || other->var != w->var) continue;
                if (other->subs != w->subs) {
                    return false;  // touches the written array at a shifted index
                }
            }
        }
        return true;
    }

    Lexer lexer_;
    Token cur_;
    std::map<std::string, VarDecl> decls_;
    std::vector<LoopNode> nodes_;
    std::vector<std::string> loop_var_stack_;
    bool pending_seq_ = false;
    std::optional<std::int64_t> pending_ops_;
    std::optional<std::int64_t> pending_bytes_;
};

}  // namespace

const LoopStatement& LoopProgram::loop(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= loops.size()) {
        throw std::invalid_argument("unknown loop id " + std::to_string(id));
    }
    return loops[id];
}

std::vector<std::vector<int>> child_index(const LoopProgram& program) {
    std::vector<std::vector<int>> index(program.loops.size() + 1);
    for (const LoopStatement& l : program.loops) {
        if (l.parent) {
            index[*l.parent].push_back(l.id);
        } else {
            index[program.loops.size()].push_back(l.id);
        }
    }
    return index;
}

LoopProgram parse_source(const std::string& text) {
    Parser parser(text);
    return parser.parse();
}

LoopProgram parse_descriptor(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("descriptor is not valid JSON: ") + e.what());
    }
    LoopProgram program;
    if (!doc.is_object() || !doc.contains("loops") || !doc.contains("variables")) {
        throw ParseError("descriptor must be an object with 'loops' and 'variables'");
    }
    for (const auto& [name, size] : doc.at("variables").items()) {
        if (!size.is_number_integer() || size.get<std::int64_t>() < 1) {
            throw ParseError("variable '" + name + "' must have a positive byte size");
        }
        program.variables[name] = size.get<std::int64_t>();
    }
    int expected_id = 0;
    for (const auto& j : doc.at("loops")) {
        LoopStatement l;
        l.id = j.at("id").get<int>();
        if (l.id != expected_id++) {
            throw ParseError("loop ids must be 0-based and in document order");
        }
        if (j.contains("parent") && !j.at("parent").is_null()) {
            l.parent = j.at("parent").get<int>();
            if (*l.parent < 0 || *l.parent >= l.id) {
                throw ParseError("loop " + std::to_string(l.id) + ": parent must precede it");
            }
        }
        l.depth = j.at("depth").get<int>();
        int parent_depth = l.parent ? program.loops[*l.parent].depth : -1;
        if (l.depth != parent_depth + 1) {
            throw ParseError("loop " + std::to_string(l.id) + ": depth must be parent depth + 1");
        }
        l.trip_count = j.at("trip_count").get<std::int64_t>();
        if (l.trip_count < 1) {
            throw ParseError("loop " + std::to_string(l.id) + ": trip_count must be >= 1");
        }
        l.ops_per_iter = j.at("ops_per_iter").get<std::int64_t>();
        l.bytes_per_iter = j.at("bytes_per_iter").get<std::int64_t>();
        if (l.ops_per_iter < 0 || l.bytes_per_iter < 0) {
            throw ParseError("loop " + std::to_string(l.id) + ": op/byte counts must be >= 0");
        }
        for (const auto& r : j.at("reads")) l.reads.insert(r.get<std::string>());
        for (const auto& w : j.at("writes")) l.writes.insert(w.get<std::string>());
        for (const auto& set : {l.reads, l.writes}) {
            for (const std::string& name : set) {
                if (!program.variables.count(name)) {
                    throw ParseError("loop " + std::to_string(l.id) + " references undeclared '" +
                                     name + "'");
                }
            }
        }
        l.parallelizable = j.at("parallelizable").get<bool>();
        program.loops.push_back(std::move(l));
    }
    program.source_digest = compute_digest(program);
    return program;
}

LoopProgram parse_program_text(const std::string& text) {
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        return parse_descriptor(text);
    }
    return parse_source(text);
}

std::string to_descriptor_json(const LoopProgram& program) {
    nlohmann::ordered_json doc;
    doc["variables"] = nlohmann::ordered_json::object();
    for (const auto& [name, size] : program.variables) doc["variables"][name] = size;
    doc["loops"] = nlohmann::ordered_json::array();
    for (const LoopStatement& l : program.loops) {
        nlohmann::ordered_json j;
        j["id"] = l.id;
        if (l.parent) {
            j["parent"] = *l.parent;
        } else {
            j["parent"] = nullptr;
        }
        j["depth"] = l.depth;
        j["trip_count"] = l.trip_count;
        j["ops_per_iter"] = l.ops_per_iter;
        j["bytes_per_iter"] = l.bytes_per_iter;
        j["reads"] = l.reads;
        j["writes"] = l.writes;
        j["parallelizable"] = l.parallelizable;
        doc["loops"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

std::vector<int> parallelizable_ids(const LoopProgram& program) {
    std::vector<int> ids;
    for (const LoopStatement& l : program.loops) {
        if (l.parallelizable) ids.push_back(l.id);
    }
    return ids;
}

double arithmetic_intensity(const LoopStatement& loop) {
    return static_cast<double>(loop.ops_per_iter) /
           static_cast<double>(std::max<std::int64_t>(loop.bytes_per_iter, 1));
}

std::int64_t total_trip_count(const LoopProgram& program, int loop_id) {
    std::int64_t total = 1;
    for (std::optional<int> id = loop_id; id; id = program.loop(*id).parent) {
        total *= program.loop(*id).trip_count;
    }
    return total;
}

std::int64_t entry_count(const LoopProgram& program, int loop_id) {
    const LoopStatement& l = program.loop(loop_id);
    return l.parent ? total_trip_count(program, *l.parent) : 1;
}

std::string compute_digest(const LoopProgram& program) {
    std::uint64_t h = kFnvOffset;
    for (const LoopStatement& l : program.loops) {
        std::ostringstream os;
        os << 'L' << l.id << '|' << (l.parent ? std::to_string(*l.parent) : "-") << '|' << l.depth
           << '|' << l.trip_count << '|' << l.ops_per_iter << '|' << l.bytes_per_iter << "|r:";
        for (const std::string& r : l.reads) os << r << ',';
        os << "|w:";
        for (const std::string& w : l.writes) os << w << ',';
        os << "|p:" << (l.parallelizable ? 1 : 0) << ';';
        h = fnv1a(h, os.str());
    }
    for (const auto& [name, size] : program.variables) {
        h = fnv1a(h, "V" + name + "=" + std::to_string(size) + ";");
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace offload
