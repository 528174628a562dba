#include "testport/xml.hpp"

#include <algorithm>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "testport/errors.hpp"

namespace testport::xml {
namespace {

namespace pt = boost::property_tree;

Element from_ptree(const std::string& tag, const pt::ptree& node) {
    Element out;
    out.tag = tag;
    for (const auto& [key, child] : node) {
        if (key == "<xmlattr>") {
            for (const auto& [name, value] : child) out.attributes.emplace_back(name, value.data());
        } else if (key == "<xmlcomment>" || key == "<xmltext>") {
            continue;
        } else {
            out.children.push_back(from_ptree(key, child));
        }
    }
    return out;
}

void write_element(std::ostringstream& os, const Element& e, int depth, bool pretty) {
    if (pretty) os << std::string(static_cast<std::size_t>(depth) * 2, ' ');
    os << '<' << e.tag;
    for (const auto& [k, v] : e.attributes) os << ' ' << k << "=\"" << escape_attribute(v) << '"';
    if (e.children.empty()) {
        os << "/>";
        if (pretty) os << '\n';
        return;
    }
    os << '>';
    if (pretty) os << '\n';
    for (const auto& c : e.children) write_element(os, c, depth + 1, pretty);
    if (pretty) os << std::string(static_cast<std::size_t>(depth) * 2, ' ');
    os << "</" << e.tag << '>';
    if (pretty) os << '\n';
}

void sort_attributes(Element& e) {
    std::stable_sort(e.attributes.begin(), e.attributes.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& c : e.children) sort_attributes(c);
}

}  // namespace

const std::string* Element::attribute(std::string_view name) const {
    for (const auto& [k, v] : attributes)
        if (k == name) return &v;
    return nullptr;
}

Element parse(std::string_view text) {
    pt::ptree tree;
    std::istringstream is{std::string(text)};
    try {
        pt::read_xml(is, tree, pt::xml_parser::no_comments);
    } catch (const pt::xml_parser_error& e) {
        throw MalformedXml(std::string("malformed XML: ") + e.what());
    }
    const pt::ptree* root = nullptr;
    std::string root_tag;
    for (const auto& [key, child] : tree) {
        if (key == "<xmlcomment>" || key == "<xmlattr>") continue;
        if (root) throw MalformedXml("malformed XML: more than one root element");
        root = &child;
        root_tag = key;
    }
    if (!root) throw MalformedXml("malformed XML: no root element");
    return from_ptree(root_tag, *root);
}

std::string write(const Element& root) {
    std::ostringstream os;
    write_element(os, root, 0, true);
    return os.str();
}

std::string canonicalize(std::string_view text) {
    Element root = parse(text);
    sort_attributes(root);
    std::ostringstream os;
    write_element(os, root, 0, false);
    return os.str();
}

std::string escape_attribute(std::string_view value) {
    std::string out;
    out.reserve(value.size());
    for (char c : value) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\n': out += "&#10;"; break;
            case '\r': out += "&#13;"; break;
            case '\t': out += "&#9;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace testport::xml
