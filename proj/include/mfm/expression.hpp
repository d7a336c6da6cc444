#pragma once

#include "mfm/common.hpp"

#include <string>

namespace mfm {

// Mean-field arguments an expression can read: per-coordinate means of the
// minor-agent measure and its p-th moment.
struct MeasureFunctionals {
    Vec mean;
    double sigma_p = 0.0;
};

// Which right-hand side an expression belongs to. Admission rules:
//   FI  : t, x<i>, y<i>, u<i>, mean(<i>), sigma_p   (v rejected)
//   FII : t, x<i>, y<i>, v<i>, mean(<i>), sigma_p   (u rejected)
//   G   : t, y<i>, v<i>, mean(<i>), sigma_p         (x, u rejected)
//   Payoff: y<i>, mean(<i>), sigma_p                (terminal data only)
enum class Block { FI, FII, G, Payoff };

class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, int line, int col)
        : ValidationError(msg + " at " + std::to_string(line) + ":" + std::to_string(col)),
          line(line),
          col(col) {}
    int line;
    int col;
};

struct EvalArgs {
    double t = 0.0;
    const Vec* x = nullptr;
    const Vec* y = nullptr;
    const Vec* u = nullptr;
    const Vec* v = nullptr;
    const MeasureFunctionals* mf = nullptr;
};

struct ExprDims {
    int d = -1;        // state coordinates (x)
    int d_prime = -1;  // major coordinates (y)
    int du = -1;       // minor control coordinates
    int dv = -1;       // major control coordinates; -1 skips the bound check
};

// Parsed arithmetic over t, state/control coordinates, and measure
// functionals. Grammar:
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := number | var | func "(" expr ")" | "(" expr ")" | "-" factor
//   var    := "t" | "x"<i> | "y"<i> | "u"<i> | "v"<i> | "sigma_p" | "mean(" <i> ")"
//   func   := "sin" | "cos" | "exp" | "tanh" | "abs"
class Expression {
public:
    static Expression parse(const std::string& text, Block block, const ExprDims& dims = {});
    static Expression constant(double value);
    // base + scale * delta, used to build perturbed fields.
    static Expression add_scaled(const Expression& base, double scale, const Expression& delta);

    // Throws ValidationError on a non-finite result (overflow, division by zero).
    double eval(const EvalArgs& args) const;

    // Canonical text; parsing it again reproduces the same tree.
    std::string text() const;
    bool same_tree(const Expression& other) const;
    bool empty() const { return nodes_.empty(); }

    // Which arguments the expression actually reads. max_* are the highest
    // coordinate indices used, -1 when absent.
    struct Refs {
        bool uses_t = false;
        bool uses_sigma_p = false;
        int max_x = -1;
        int max_y = -1;
        int max_u = -1;
        int max_v = -1;
        int max_mean = -1;
        void absorb(const Refs& other);
    };
    Refs refs() const;

private:
    enum class Kind {
        Number, T, X, Y, U, V, Mean, SigmaP,
        Add, Sub, Mul, Div, Neg,
        Sin, Cos, Exp, Tanh, Abs
    };
    struct Node {
        Kind kind;
        double num = 0.0;
        int index = -1;
        int a = -1;
        int b = -1;
    };
    std::vector<Node> nodes_;
    int root_ = -1;

    double eval_node(int ix, const EvalArgs& args) const;
    void print_node(int ix, int parent_level, bool right_side, std::string& out) const;
    static bool nodes_equal(const Expression& ea, int ia, const Expression& eb, int ib);
    int clone_into(std::vector<Node>& dst) const;
    friend class ExprParser;
};

}  // namespace mfm
