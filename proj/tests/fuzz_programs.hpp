#pragma once

// Template fuzzer: random programs whose user-defined names are
// placeholders, so the same skeleton can be instantiated under different
// consistent renamings.

#include <set>
#include <string>
#include <vector>

#include "hloc/rng.hpp"
#include "hloc/types.hpp"

namespace hloc::testing {

struct ProgramTemplate {
  Language language = Language::Python;
  std::string skeleton;             // placeholders are \x01<index>\x02
  std::size_t names = 0;            // placeholder count
  std::size_t header_end = 0;       // skeleton byte where the first line ends
  std::set<std::size_t> header_names;  // placeholders defined on the first line

  std::string instantiate(const std::vector<std::string>& binding) const {
    std::string out;
    for (std::size_t i = 0; i < skeleton.size(); ++i) {
      if (skeleton[i] != '\x01') {
        out += skeleton[i];
        continue;
      }
      const std::size_t close = skeleton.find('\x02', i);
      out += binding.at(std::stoul(skeleton.substr(i + 1, close - i - 1)));
      i = close;
    }
    return out;
  }

  /// Instantiated first line (with its newline) and the rest.
  std::pair<std::string, std::string> split_header(const std::vector<std::string>& binding) const {
    ProgramTemplate head = *this;
    head.skeleton = skeleton.substr(0, header_end);
    ProgramTemplate body = *this;
    body.skeleton = skeleton.substr(header_end);
    return {head.instantiate(binding), body.instantiate(binding)};
  }
};

/// Distinct fresh names that avoid keywords, names used by the templates,
/// and the v<digits> shape.
inline std::vector<std::string> fresh_names(std::size_t count, Rng& rng) {
  static const std::set<std::string> reserved = {
      // Python
      "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif", "else", "except",
      "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass",
      "raise", "return", "try", "while", "with", "yield", "match", "case", "print", "exec", "len", "abs", "range",
      "zip", "open", "sum", "max", "min", "nums", "ValueError", "True", "False", "None", "self", "append", "sorted",
      // Java
      "abstract", "boolean", "byte", "catch", "char", "const", "default", "do", "double", "enum", "extends", "final",
      "float", "goto", "implements", "instanceof", "int", "interface", "long", "native", "new", "package", "private",
      "protected", "public", "short", "static", "strictfp", "super", "switch", "synchronized", "this", "throw",
      "throws", "transient", "void", "volatile", "var", "record", "true", "false", "null", "Integer", "List",
      "ArrayList", "String", "Math", "System", "out", "println", "length", "size", "add", "get", "sort", "compareTo",
      "Solution", "total"};
  static const char* letters = "abcdefghijklmnopqrstuwxyz";  // no 'v' start avoids v<digits>
  std::set<std::string> used;
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string name(1, letters[rng.below(25)]);
    const std::size_t extra = rng.below(7);
    for (std::size_t i = 0; i < extra; ++i) {
      const std::size_t r = rng.below(38);
      name += r < 26 ? static_cast<char>('a' + r) : (r < 36 ? static_cast<char>('0' + r - 26) : '_');
    }
    if (reserved.contains(name) || !used.insert(name).second) continue;
    out.push_back(name);
  }
  return out;
}

class PythonFuzzer {
 public:
  explicit PythonFuzzer(Rng& rng) : rng_(rng) {}

  ProgramTemplate generate(int statements = 6) {
    out_.clear();
    vars_.clear();
    next_ = 0;
    ProgramTemplate t;
    t.language = Language::Python;
    out_ += "def " + def() + "(";
    const std::size_t params = 1 + rng_.below(3);
    for (std::size_t i = 0; i < params; ++i) out_ += (i ? ", " : "") + def(true);
    out_ += "):\n";
    t.header_end = out_.size();
    for (std::size_t i = 0; i < next_; ++i) t.header_names.insert(i);
    block(1, statements);
    out_ += "    return " + expr() + "\n";
    t.skeleton = out_;
    t.names = next_;
    return t;
  }

 private:
  static std::string ph(std::size_t id) { return "\x01" + std::to_string(id) + "\x02"; }

  std::string def(bool variable = false) {
    const std::size_t id = next_++;
    if (variable) vars_.push_back(id);
    return ph(id);
  }

  std::string use() {
    if (vars_.empty() || rng_.below(5) == 0) return constant();
    return ph(vars_[rng_.below(vars_.size())]);
  }

  std::string constant() {
    switch (rng_.below(4)) {
      case 0: return std::to_string(1 + rng_.below(9));
      case 1: return "len(nums)";
      case 2: return "'abc'";
      default: return "nums";
    }
  }

  std::string expr(int depth = 0) {
    if (depth > 1 || rng_.below(3) == 0) return use();
    static const char* ops[] = {" + ", " - ", " * ", " % "};
    switch (rng_.below(4)) {
      case 0: return expr(depth + 1) + ops[rng_.below(4)] + expr(depth + 1);
      case 1: return "abs(" + expr(depth + 1) + ")";
      case 2: return "(" + expr(depth + 1) + ops[rng_.below(4)] + use() + ")";
      default: return "max(" + use() + ", " + use() + ")";
    }
  }

  std::string cond() {
    static const char* cmps[] = {" < ", " > ", " == ", " != "};
    std::string c = use() + cmps[rng_.below(4)] + use();
    if (rng_.below(3) == 0) c += (rng_.below(2) ? " and " : " or ") + use() + cmps[rng_.below(4)] + constant();
    return c;
  }

  void line(int indent, const std::string& text) { out_ += std::string(static_cast<std::size_t>(indent) * 4, ' ') + text + "\n"; }

  void block(int indent, int statements) {
    for (int i = 0; i < statements; ++i) statement(indent);
  }

  void statement(int indent) {
    const bool nest = indent < 3;
    switch (rng_.below(nest ? 12 : 5)) {
      case 0: {
        const std::string e = expr();
        line(indent, def(true) + " = " + e);
        break;
      }
      case 1: {
        const std::string a = expr(), b = expr();
        const std::string x = def(true);
        line(indent, x + ", " + def(true) + " = " + a + ", " + b);
        break;
      }
      case 2: line(indent, "print(" + expr() + ")"); break;
      case 3: {
        if (vars_.empty()) {
          line(indent, def(true) + " = " + constant());
        } else {
          line(indent, ph(vars_[rng_.below(vars_.size())]) + " += " + expr());
        }
        break;
      }
      case 4: {
        const std::string src = rng_.below(2) ? "nums" : "range(" + std::to_string(2 + rng_.below(8)) + ")";
        const std::string x = def(true);
        const std::string e = expr();
        line(indent, def(true) + " = [" + e + " * " + x + " for " + x + " in " + src + "]");
        break;
      }
      case 5: {
        const std::string f = def(true);
        const std::string p = def(true);
        line(indent, f + " = lambda " + p + ": " + p + " + " + std::to_string(1 + rng_.below(9)));
        break;
      }
      case 6: {
        const std::string src = rng_.below(2) ? "nums" : "range(" + expr() + ")";
        line(indent, "for " + def(true) + " in " + src + ":");
        block(indent + 1, 1 + static_cast<int>(rng_.below(2)));
        break;
      }
      case 7: {
        const std::string a = use(), b = use();
        const std::string x = def(true);
        line(indent, "for " + x + ", " + def(true) + " in zip(" + a + ", " + b + "):");
        block(indent + 1, 1 + static_cast<int>(rng_.below(2)));
        break;
      }
      case 8: {
        line(indent, "if " + cond() + ":");
        block(indent + 1, 1 + static_cast<int>(rng_.below(2)));
        if (rng_.below(2)) {
          line(indent, "elif " + cond() + ":");
          block(indent + 1, 1);
        }
        if (rng_.below(2)) {
          line(indent, "else:");
          block(indent + 1, 1);
        }
        break;
      }
      case 9: {
        line(indent, "while " + cond() + ":");
        block(indent + 1, 1);
        line(indent + 1, rng_.below(2) ? "break" : "continue");
        break;
      }
      case 10: {
        line(indent, "with open('data.txt') as " + def(true) + ":");
        block(indent + 1, 1);
        break;
      }
      default: {
        line(indent, "try:");
        block(indent + 1, 1);
        line(indent, "except ValueError as " + def(true) + ":");
        block(indent + 1, 1);
        break;
      }
    }
  }

  Rng& rng_;
  std::string out_;
  std::vector<std::size_t> vars_;
  std::size_t next_ = 0;
};

class JavaFuzzer {
 public:
  explicit JavaFuzzer(Rng& rng) : rng_(rng) {}

  ProgramTemplate generate(int statements = 6) {
    out_.clear();
    ints_.clear();
    lists_.clear();
    next_ = 0;
    ProgramTemplate t;
    t.language = Language::Java;
    const std::string method = def();
    const std::string array = def();
    out_ += "public int " + method + "(int[] " + array + ", int " + def_int() + ") {\n";
    array_ = array;
    t.header_end = out_.size();
    for (std::size_t i = 0; i < next_; ++i) t.header_names.insert(i);
    block(1, statements);
    line(1, "return " + expr() + ";");
    out_ += "}\n";
    t.skeleton = out_;
    t.names = next_;
    return t;
  }

 private:
  static std::string ph(std::size_t id) { return "\x01" + std::to_string(id) + "\x02"; }

  std::string def() { return ph(next_++); }
  std::string def_int() {
    ints_.push_back(next_);
    return def();
  }

  std::string use() {
    if (ints_.empty() || rng_.below(5) == 0) {
      switch (rng_.below(3)) {
        case 0: return std::to_string(1 + rng_.below(9));
        case 1: return array_ + ".length";
        default: return array_ + "[0]";
      }
    }
    return ph(ints_[rng_.below(ints_.size())]);
  }

  std::string expr(int depth = 0) {
    if (depth > 1 || rng_.below(3) == 0) return use();
    static const char* ops[] = {" + ", " - ", " * ", " % "};
    switch (rng_.below(3)) {
      case 0: return expr(depth + 1) + ops[rng_.below(4)] + expr(depth + 1);
      case 1: return "Math.max(" + expr(depth + 1) + ", " + use() + ")";
      default: return "(" + expr(depth + 1) + ops[rng_.below(4)] + use() + ")";
    }
  }

  std::string cond() {
    static const char* cmps[] = {" < ", " > ", " == ", " != "};
    std::string c = use() + cmps[rng_.below(4)] + use();
    if (rng_.below(3) == 0) c += (rng_.below(2) ? " && " : " || ") + use() + cmps[rng_.below(4)] + use();
    return c;
  }

  void line(int indent, const std::string& text) { out_ += std::string(static_cast<std::size_t>(indent) * 4, ' ') + text + "\n"; }

  void block(int indent, int statements) {
    for (int i = 0; i < statements; ++i) statement(indent);
  }

  void statement(int indent) {
    const bool nest = indent < 3;
    switch (rng_.below(nest ? 10 : 4)) {
      case 0: {
        const std::string e = expr();
        line(indent, "int " + def_int() + " = " + e + ";");
        break;
      }
      case 1: line(indent, "System.out.println(" + expr() + ");"); break;
      case 2: {
        if (ints_.empty()) {
          line(indent, "int " + def_int() + " = 0;");
        } else {
          line(indent, ph(ints_[rng_.below(ints_.size())]) + " += " + expr() + ";");
        }
        break;
      }
      case 3: {
        const std::string l = def();
        lists_.push_back(l);
        line(indent, "List<Integer> " + l + " = new ArrayList<>();");
        line(indent, l + ".add(" + expr() + ");");
        break;
      }
      case 4: {
        if (lists_.empty()) {
          line(indent, "int " + def_int() + " = " + expr() + ";");
          break;
        }
        const std::string l = lists_[rng_.below(lists_.size())];
        const std::string a = def(), b = def();
        line(indent, l + ".sort((" + a + ", " + b + ") -> " + b + ".compareTo(" + a + "));");
        break;
      }
      case 5: {
        const std::string bound = use();
        const std::string i = def_int();
        line(indent, "for (int " + i + " = 0; " + i + " < " + bound + "; " + i + "++) {");
        block(indent + 1, 1 + static_cast<int>(rng_.below(2)));
        line(indent, "}");
        break;
      }
      case 6: {
        line(indent, "for (int " + def_int() + " : " + array_ + ") {");
        block(indent + 1, 1 + static_cast<int>(rng_.below(2)));
        line(indent, "}");
        break;
      }
      case 7: {
        line(indent, "if (" + cond() + ") {");
        block(indent + 1, 1 + static_cast<int>(rng_.below(2)));
        if (rng_.below(2)) {
          line(indent, "} else {");
          block(indent + 1, 1);
        }
        line(indent, "}");
        break;
      }
      case 8: {
        line(indent, "while (" + cond() + ") {");
        block(indent + 1, 1);
        line(indent + 1, rng_.below(2) ? "break;" : "continue;");
        line(indent, "}");
        break;
      }
      default: {
        line(indent, "Integer " + def() + " = " + expr() + ";");
        break;
      }
    }
  }

  Rng& rng_;
  std::string out_;
  std::vector<std::size_t> ints_;
  std::vector<std::string> lists_;
  std::string array_;
  std::size_t next_ = 0;
};

inline ProgramTemplate random_program(Language language, Rng& rng, int statements = 6) {
  if (language == Language::Python) return PythonFuzzer(rng).generate(statements);
  return JavaFuzzer(rng).generate(statements);
}

/// BPE-like segmentation: words, numbers, operators and delimiters, each
/// carrying the whitespace before it.
inline std::vector<std::string> lex_tokens(const std::string& text) {
  static const char* multi[] = {"==", "!=", "<=", ">=", "+=", "-=", "*=", "++", "--", "&&", "||", "->", "**", "//"};
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\n' || text[i] == '\t')) ++i;
    if (i == text.size()) {
      if (!out.empty()) out.back() += text.substr(start);
      else out.push_back(text.substr(start));
      break;
    }
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isalnum(c) || c == '_') {
      while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
    } else if (c == '\'' || c == '"') {
      const char q = text[i++];
      while (i < text.size() && text[i] != q) ++i;
      if (i < text.size()) ++i;
    } else {
      bool matched = false;
      for (const char* m : multi) {
        if (text.compare(i, 2, m) == 0) {
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) ++i;
    }
    out.push_back(text.substr(start, i - start));
  }
  return out;
}

}  // namespace hloc::testing
