#include "mfm/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace mfm {

namespace {

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, LParen, RParen, End };

struct Token {
    TokKind kind = TokKind::End;
    double num = 0.0;
    std::string text;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_ws();
        Token tok;
        tok.line = line_;
        tok.col = col_;
        if (pos_ >= src_.size()) {
            tok.kind = TokKind::End;
            return tok;
        }
        char c = src_[pos_];
        switch (c) {
            case '+': advance(); tok.kind = TokKind::Plus; return tok;
            case '-': advance(); tok.kind = TokKind::Minus; return tok;
            case '*': advance(); tok.kind = TokKind::Star; return tok;
            case '/': advance(); tok.kind = TokKind::Slash; return tok;
            case '(': advance(); tok.kind = TokKind::LParen; return tok;
            case ')': advance(); tok.kind = TokKind::RParen; return tok;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            return lex_number(tok);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                advance();
            }
            tok.kind = TokKind::Ident;
            tok.text = src_.substr(start, pos_ - start);
            return tok;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

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
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            advance();
        }
    }

    Token lex_number(Token tok) {
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            advance();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
            } else {
                // "2e" with no exponent digits: leave "e..." for the ident lexer.
                pos_ = mark;
            }
        }
        tok.kind = TokKind::Number;
        tok.text = src_.substr(start, pos_ - start);
        tok.num = std::strtod(tok.text.c_str(), nullptr);
        return tok;
    }
};

}  // namespace

class ExprParser {
public:
    ExprParser(const std::string& src, Block block, const ExprDims& dims)
        : lexer_(src), block_(block), dims_(dims) {
        cur_ = lexer_.next();
    }

    Expression run() {
        Expression e;
        e.root_ = parse_expr(e.nodes_);
        if (cur_.kind != TokKind::End) {
            throw ParseError("unexpected trailing input", cur_.line, cur_.col);
        }
        return e;
    }

private:
    using Node = Expression::Node;
    using Kind = Expression::Kind;

    Lexer lexer_;
    Token cur_;
    Block block_;
    ExprDims dims_;

    void bump() { cur_ = lexer_.next(); }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, cur_.line, cur_.col);
    }

    static int push(std::vector<Node>& nodes, Node n) {
        nodes.push_back(n);
        return static_cast<int>(nodes.size()) - 1;
    }

    int parse_expr(std::vector<Node>& nodes) {
        int lhs = parse_term(nodes);
        while (cur_.kind == TokKind::Plus || cur_.kind == TokKind::Minus) {
            Kind k = cur_.kind == TokKind::Plus ? Kind::Add : Kind::Sub;
            bump();
            int rhs = parse_term(nodes);
            lhs = push(nodes, Node{k, 0.0, -1, lhs, rhs});
        }
        return lhs;
    }

    int parse_term(std::vector<Node>& nodes) {
        int lhs = parse_factor(nodes);
        while (cur_.kind == TokKind::Star || cur_.kind == TokKind::Slash) {
            Kind k = cur_.kind == TokKind::Star ? Kind::Mul : Kind::Div;
            bump();
            int rhs = parse_factor(nodes);
            lhs = push(nodes, Node{k, 0.0, -1, lhs, rhs});
        }
        return lhs;
    }

    int parse_factor(std::vector<Node>& nodes) {
        switch (cur_.kind) {
            case TokKind::Number: {
                double v = cur_.num;
                bump();
                return push(nodes, Node{Kind::Number, v, -1, -1, -1});
            }
            case TokKind::Minus: {
                bump();
                int inner = parse_factor(nodes);
                return push(nodes, Node{Kind::Neg, 0.0, -1, inner, -1});
            }
            case TokKind::LParen: {
                bump();
                int inner = parse_expr(nodes);
                expect_rparen();
                return inner;
            }
            case TokKind::Ident:
                return parse_ident(nodes);
            case TokKind::End:
                fail("unexpected end of input");
            default:
                fail("expected a number, variable, function call, or '('");
        }
    }

    void expect_rparen() {
        if (cur_.kind != TokKind::RParen) fail("expected ')'");
        bump();
    }

    int parse_ident(std::vector<Node>& nodes) {
        Token tok = cur_;
        const std::string& name = tok.text;
        bump();

        if (name == "t") {
            if (block_ == Block::Payoff) {
                throw ParseError("'t' is not allowed in a terminal payoff", tok.line, tok.col);
            }
            return push(nodes, Node{Kind::T, 0.0, -1, -1, -1});
        }
        if (name == "sigma_p") {
            return push(nodes, Node{Kind::SigmaP, 0.0, -1, -1, -1});
        }
        if (name == "mean") {
            if (cur_.kind != TokKind::LParen) fail("expected '(' after mean");
            bump();
            if (cur_.kind != TokKind::Number || cur_.num != std::floor(cur_.num) ||
                cur_.text.find_first_of(".eE") != std::string::npos) {
                fail("mean expects an integer coordinate literal");
            }
            int ix = static_cast<int>(cur_.num);
            check_index(ix, dims_.d, "mean", tok);
            bump();
            expect_rparen();
            return push(nodes, Node{Kind::Mean, 0.0, ix, -1, -1});
        }
        Kind fn;
        if (name == "sin") fn = Kind::Sin;
        else if (name == "cos") fn = Kind::Cos;
        else if (name == "exp") fn = Kind::Exp;
        else if (name == "tanh") fn = Kind::Tanh;
        else if (name == "abs") fn = Kind::Abs;
        else return parse_var(nodes, tok);
        if (cur_.kind != TokKind::LParen) fail("expected '(' after " + name);
        bump();
        int inner = parse_expr(nodes);
        expect_rparen();
        return push(nodes, Node{fn, 0.0, -1, inner, -1});
    }

    int parse_var(std::vector<Node>& nodes, const Token& tok) {
        const std::string& name = tok.text;
        char head = name[0];
        bool indexed = name.size() > 1 &&
                       name.find_first_not_of("0123456789", 1) == std::string::npos;
        if (!indexed || (head != 'x' && head != 'y' && head != 'u' && head != 'v')) {
            throw ParseError("unknown identifier '" + name + "'", tok.line, tok.col);
        }
        int ix = std::atoi(name.c_str() + 1);
        switch (head) {
            case 'x':
                if (block_ == Block::G || block_ == Block::Payoff) {
                    throw ParseError("'" + name + "' is not allowed in " + block_name(),
                                     tok.line, tok.col);
                }
                check_index(ix, dims_.d, name, tok);
                return push(nodes, Node{Kind::X, 0.0, ix, -1, -1});
            case 'y':
                check_index(ix, dims_.d_prime, name, tok);
                return push(nodes, Node{Kind::Y, 0.0, ix, -1, -1});
            case 'u':
                if (block_ != Block::FI) {
                    throw ParseError("'" + name + "' is not allowed in " + block_name(),
                                     tok.line, tok.col);
                }
                check_index(ix, dims_.du, name, tok);
                return push(nodes, Node{Kind::U, 0.0, ix, -1, -1});
            default:
                if (block_ != Block::FII && block_ != Block::G) {
                    throw ParseError("'" + name + "' is not allowed in " + block_name(),
                                     tok.line, tok.col);
                }
                check_index(ix, dims_.dv, name, tok);
                return push(nodes, Node{Kind::V, 0.0, ix, -1, -1});
        }
    }

    void check_index(int ix, int bound, const std::string& what, const Token& tok) const {
        if (bound >= 0 && ix >= bound) {
            throw ParseError("'" + what + "' index " + std::to_string(ix) +
                                 " out of range (dimension " + std::to_string(bound) + ")",
                             tok.line, tok.col);
        }
    }

    std::string block_name() const {
        switch (block_) {
            case Block::FI: return "f_I";
            case Block::FII: return "f_II";
            case Block::G: return "g";
            default: return "a terminal payoff";
        }
    }
};

Expression Expression::parse(const std::string& text, Block block, const ExprDims& dims) {
    return ExprParser(text, block, dims).run();
}

Expression Expression::constant(double value) {
    Expression e;
    e.nodes_.push_back(Node{Kind::Number, value, -1, -1, -1});
    e.root_ = 0;
    return e;
}

int Expression::clone_into(std::vector<Node>& dst) const {
    int offset = static_cast<int>(dst.size());
    for (const Node& n : nodes_) {
        Node c = n;
        if (c.a >= 0) c.a += offset;
        if (c.b >= 0) c.b += offset;
        dst.push_back(c);
    }
    return root_ + offset;
}

Expression Expression::add_scaled(const Expression& base, double scale, const Expression& delta) {
    Expression e;
    int rb = base.clone_into(e.nodes_);
    int rs = static_cast<int>(e.nodes_.size());
    e.nodes_.push_back(Node{Kind::Number, scale, -1, -1, -1});
    int rd = delta.clone_into(e.nodes_);
    int rm = static_cast<int>(e.nodes_.size());
    e.nodes_.push_back(Node{Kind::Mul, 0.0, -1, rs, rd});
    e.nodes_.push_back(Node{Kind::Add, 0.0, -1, rb, rm});
    e.root_ = static_cast<int>(e.nodes_.size()) - 1;
    return e;
}

namespace {

double coord(const Vec* v, int ix, const char* what) {
    if (v == nullptr || ix >= v->size()) {
        throw ValidationError(std::string("expression reads ") + what + std::to_string(ix) +
                              " but the evaluation context does not supply it");
    }
    return (*v)(ix);
}

}  // namespace

double Expression::eval_node(int ix, const EvalArgs& args) const {
    const Node& n = nodes_[static_cast<std::size_t>(ix)];
    switch (n.kind) {
        case Kind::Number: return n.num;
        case Kind::T: return args.t;
        case Kind::X: return coord(args.x, n.index, "x");
        case Kind::Y: return coord(args.y, n.index, "y");
        case Kind::U: return coord(args.u, n.index, "u");
        case Kind::V: return coord(args.v, n.index, "v");
        case Kind::Mean:
            if (args.mf == nullptr || n.index >= args.mf->mean.size()) {
                throw ValidationError("expression reads mean(" + std::to_string(n.index) +
                                      ") but the evaluation context does not supply it");
            }
            return args.mf->mean(n.index);
        case Kind::SigmaP:
            if (args.mf == nullptr) {
                throw ValidationError(
                    "expression reads sigma_p but the evaluation context does not supply it");
            }
            return args.mf->sigma_p;
        case Kind::Add: return eval_node(n.a, args) + eval_node(n.b, args);
        case Kind::Sub: return eval_node(n.a, args) - eval_node(n.b, args);
        case Kind::Mul: return eval_node(n.a, args) * eval_node(n.b, args);
        case Kind::Div: return eval_node(n.a, args) / eval_node(n.b, args);
        case Kind::Neg: return -eval_node(n.a, args);
        case Kind::Sin: return std::sin(eval_node(n.a, args));
        case Kind::Cos: return std::cos(eval_node(n.a, args));
        case Kind::Exp: return std::exp(eval_node(n.a, args));
        case Kind::Tanh: return std::tanh(eval_node(n.a, args));
        case Kind::Abs: return std::abs(eval_node(n.a, args));
    }
    throw ValidationError("corrupt expression node");
}

double Expression::eval(const EvalArgs& args) const {
    if (root_ < 0) throw ValidationError("evaluating an empty expression");
    double v = eval_node(root_, args);
    if (!std::isfinite(v)) {
        throw ValidationError("expression evaluated to a non-finite value");
    }
    return v;
}

void Expression::print_node(int ix, int parent_level, bool right_side, std::string& out) const {
    const Node& n = nodes_[static_cast<std::size_t>(ix)];
    int level;  // 1 add/sub, 2 mul/div, 3 neg, 4 atom
    switch (n.kind) {
        case Kind::Add: case Kind::Sub: level = 1; break;
        case Kind::Mul: case Kind::Div: level = 2; break;
        case Kind::Neg: level = 3; break;
        default: level = 4; break;
    }
    // Right operands of -,/ bind one step tighter so a-(b+c) keeps its parens.
    bool need_paren = level < 4 && level < parent_level + (right_side ? 1 : 0);
    if (need_paren) out += '(';
    switch (n.kind) {
        case Kind::Number: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", n.num);
            out += buf;
            break;
        }
        case Kind::T: out += 't'; break;
        case Kind::X: out += 'x'; out += std::to_string(n.index); break;
        case Kind::Y: out += 'y'; out += std::to_string(n.index); break;
        case Kind::U: out += 'u'; out += std::to_string(n.index); break;
        case Kind::V: out += 'v'; out += std::to_string(n.index); break;
        case Kind::Mean: out += "mean(" + std::to_string(n.index) + ")"; break;
        case Kind::SigmaP: out += "sigma_p"; break;
        case Kind::Add:
            print_node(n.a, 1, false, out);
            out += " + ";
            print_node(n.b, 1, true, out);
            break;
        case Kind::Sub:
            print_node(n.a, 1, false, out);
            out += " - ";
            print_node(n.b, 1, true, out);
            break;
        case Kind::Mul:
            print_node(n.a, 2, false, out);
            out += "*";
            print_node(n.b, 2, true, out);
            break;
        case Kind::Div:
            print_node(n.a, 2, false, out);
            out += "/";
            print_node(n.b, 2, true, out);
            break;
        case Kind::Neg:
            out += '-';
            print_node(n.a, 3, true, out);
            break;
        case Kind::Sin: out += "sin("; print_node(n.a, 0, false, out); out += ')'; break;
        case Kind::Cos: out += "cos("; print_node(n.a, 0, false, out); out += ')'; break;
        case Kind::Exp: out += "exp("; print_node(n.a, 0, false, out); out += ')'; break;
        case Kind::Tanh: out += "tanh("; print_node(n.a, 0, false, out); out += ')'; break;
        case Kind::Abs: out += "abs("; print_node(n.a, 0, false, out); out += ')'; break;
    }
    if (need_paren) out += ')';
}

std::string Expression::text() const {
    if (root_ < 0) return "";
    std::string out;
    print_node(root_, 0, false, out);
    return out;
}

bool Expression::nodes_equal(const Expression& ea, int ia, const Expression& eb, int ib) {
    if ((ia < 0) != (ib < 0)) return false;
    if (ia < 0) return true;
    const Node& na = ea.nodes_[static_cast<std::size_t>(ia)];
    const Node& nb = eb.nodes_[static_cast<std::size_t>(ib)];
    if (na.kind != nb.kind || na.index != nb.index) return false;
    if (na.kind == Kind::Number && na.num != nb.num) return false;
    return nodes_equal(ea, na.a, eb, nb.a) && nodes_equal(ea, na.b, eb, nb.b);
}

bool Expression::same_tree(const Expression& other) const {
    return nodes_equal(*this, root_, other, other.root_);
}

void Expression::Refs::absorb(const Refs& other) {
    uses_t = uses_t || other.uses_t;
    uses_sigma_p = uses_sigma_p || other.uses_sigma_p;
    max_x = std::max(max_x, other.max_x);
    max_y = std::max(max_y, other.max_y);
    max_u = std::max(max_u, other.max_u);
    max_v = std::max(max_v, other.max_v);
    max_mean = std::max(max_mean, other.max_mean);
}

Expression::Refs Expression::refs() const {
    Refs r;
    for (const Node& n : nodes_) {
        switch (n.kind) {
            case Kind::T: r.uses_t = true; break;
            case Kind::SigmaP: r.uses_sigma_p = true; break;
            case Kind::X: r.max_x = std::max(r.max_x, n.index); break;
            case Kind::Y: r.max_y = std::max(r.max_y, n.index); break;
            case Kind::U: r.max_u = std::max(r.max_u, n.index); break;
            case Kind::V: r.max_v = std::max(r.max_v, n.index); break;
            case Kind::Mean: r.max_mean = std::max(r.max_mean, n.index); break;
            default: break;
        }
    }
    return r;
}

}  // namespace mfm
