#include "kgr/rules.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kgr {
namespace {

const char* tag_token(OrderTag t) {
    switch (t) {
        case OrderTag::LePrev: return "le";
        case OrderTag::GePrev: return "ge";
        case OrderTag::Any: return "any";
        case OrderTag::None: return "";
    }
    return "";
}

OrderTag tag_from_token(const std::string& s) {
    if (s == "le") return OrderTag::LePrev;
    if (s == "ge") return OrderTag::GePrev;
    if (s == "any") return OrderTag::Any;
    throw ParseError("unknown order tag: " + s);
}

std::string var_name(size_t i, size_t n) {
    if (i == 0) return "X";
    if (i == n) return "Z";
    return "Y" + std::to_string(i);
}

}  // namespace

std::string format_rule(const Rule& rule, const Vocab& vocab) {
    std::ostringstream out;
    char conf[32];
    std::snprintf(conf, sizeof conf, "%.6f", rule.confidence);
    out << conf << '\t' << vocab.relation_name(rule.head) << "(X,Z) <- ";
    const size_t n = rule.body.size();
    for (size_t i = 0; i < n; ++i) {
        if (i) out << " & ";
        out << vocab.relation_name(rule.body[i].rel) << '(' << var_name(i, n) << ','
            << var_name(i + 1, n) << ')';
        if (rule.cls == RuleClass::TEH)
            out << ":grow";
        else if (rule.cls == RuleClass::TIH)
            out << ':' << tag_token(rule.body[i].tag);
    }
    return out.str();
}

Rule parse_rule(const std::string& line, const Vocab& vocab) {
    Rule rule;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("rule line missing confidence: " + line);
    rule.confidence = std::stod(line.substr(0, tab));

    std::string rest = line.substr(tab + 1);
    size_t arrow = rest.find(" <- ");
    if (arrow == std::string::npos) throw ParseError("rule line missing '<-': " + line);

    auto parse_atom = [&](const std::string& text, bool head) {
        size_t lp = text.find('(');
        size_t rp = text.find(')');
        if (lp == std::string::npos || rp == std::string::npos || rp < lp)
            throw ParseError("malformed atom: " + text);
        RelationId rel = vocab.relation(text.substr(0, lp));
        std::string tag = rp + 1 < text.size() && text[rp + 1] == ':' ? text.substr(rp + 2) : "";
        if (head) {
            rule.head = rel;
        } else if (tag == "grow") {
            rule.cls = RuleClass::TEH;
            rule.body.push_back({rel, OrderTag::None});
        } else if (!tag.empty()) {
            rule.cls = RuleClass::TIH;
            rule.body.push_back({rel, tag_from_token(tag)});
        } else {
            rule.body.push_back({rel, OrderTag::None});
        }
    };

    parse_atom(rest.substr(0, arrow), true);
    std::string body = rest.substr(arrow + 4);
    size_t start = 0;
    while (start < body.size()) {
        size_t amp = body.find(" & ", start);
        if (amp == std::string::npos) {
            parse_atom(body.substr(start), false);
            break;
        }
        parse_atom(body.substr(start, amp - start), false);
        start = amp + 3;
    }
    if (rule.body.empty()) throw ParseError("rule with empty body: " + line);
    return rule;
}

void write_rules(const std::string& path, const std::vector<Rule>& rules, const Vocab& vocab) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write rules: " + path);
    for (const Rule& r : rules) out << format_rule(r, vocab) << '\n';
}

std::vector<Rule> read_rules(const std::string& path, const Vocab& vocab) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rules: " + path);
    std::vector<Rule> rules;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        rules.push_back(parse_rule(line, vocab));
    }
    return rules;
}

void sort_rules(std::vector<Rule>& rules) {
    std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
        if (a.head != b.head) return a.head < b.head;
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.body < b.body;
    });
}

}  // namespace kgr
