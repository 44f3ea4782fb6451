#include "nlw/expr.hpp"
#include "nlw/errors.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nlw {

namespace {

class Parser {
public:
    Parser(const std::string& s, const Grid1D& g) : src_(s), grid_(g), x_(g.x()) {}

    Field parse() {
        Field v = expr();
        skip();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        return v;
    }

private:
    const std::string& src_;
    const Grid1D& grid_;
    Field x_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& why) const {
        std::ostringstream os;
        os << "profile expression '" << src_ << "': " << why << " at column " << pos_ + 1;
        throw ConfigError(os.str());
    }
    void skip() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    Field constant(double v) const { return Field::Constant(grid_.n, v); }

    Field expr() {
        Field v = term();
        for (;;) {
            if (eat('+')) v += term();
            else if (eat('-')) v -= term();
            else return v;
        }
    }
    Field term() {
        Field v = factor();
        for (;;) {
            if (eat('*')) v *= factor();
            else if (eat('/')) v /= factor();
            else return v;
        }
    }
    Field factor() {
        if (eat('-')) return -factor();
        if (eat('+')) return factor();
        return primary();
    }
    Field primary() {
        skip();
        if (pos_ >= src_.size()) fail("unexpected end");
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t used = 0;
            double v = std::stod(src_.substr(pos_), &used);
            pos_ += used;
            return constant(v);
        }
        if (eat('(')) {
            Field v = expr();
            if (!eat(')')) fail("missing ')'");
            return v;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            std::string id = src_.substr(start, pos_ - start);
            if (id == "x") return x_;
            if (id == "pi") return constant(M_PI);
            if (id == "L") return constant(grid_.L);
            if (id == "sin" || id == "cos") {
                if (!eat('(')) fail("expected '('");
                Field a = expr();
                if (!eat(')')) fail("missing ')'");
                return id == "sin" ? Field(a.sin()) : Field(a.cos());
            }
            if (id == "gauss") {
                if (!eat('(')) fail("expected '('");
                Field c0 = expr();
                if (!eat(',')) fail("gauss needs (center, width)");
                Field w = expr();
                if (!eat(')')) fail("missing ')'");
                double x0 = c0[0], wd = w[0];
                if (!(wd > 0)) fail("gauss width must be positive");
                Field r = Field::Zero(grid_.n);
                for (int m = -3; m <= 3; ++m)
                    r += (-0.5 * ((x_ - x0 + m * grid_.L) / wd).square()).exp();
                return r;
            }
            pos_ = start;
            fail("unknown identifier '" + id + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

Field read_csv_profile(const std::string& path, const Grid1D& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("profile csv not readable: " + path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto k = line.find_last_of(",\t ");
        std::string last = k == std::string::npos ? line : line.substr(k + 1);
        try {
            vals.push_back(std::stod(last));
        } catch (...) {
            continue;  // header
        }
    }
    if (static_cast<int>(vals.size()) != grid.n)
        throw ConfigError("profile csv " + path + " has " + std::to_string(vals.size()) + " values, grid has " +
                          std::to_string(grid.n));
    return Eigen::Map<Field>(vals.data(), grid.n);
}

} // namespace

Field eval_profile(const std::string& spec, const Grid1D& grid) {
    if (spec.rfind("csv:", 0) == 0) return read_csv_profile(spec.substr(4), grid);
    if (spec.empty()) return Field::Zero(grid.n);
    return Parser(spec, grid).parse();
}

} // namespace nlw
