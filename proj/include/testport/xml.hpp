#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace testport::xml {

/// Minimal DOM: element name, attributes in document order, child elements.
/// Text nodes and comments are dropped; UI hierarchies carry everything in attributes.
struct Element {
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;

    const std::string* attribute(std::string_view name) const;
};

/// Throws MalformedXml.
Element parse(std::string_view text);

/// One element per line, two-space indentation.
std::string write(const Element& root);

/// Attributes sorted by name, no insignificant whitespace.
std::string canonicalize(std::string_view text);

std::string escape_attribute(std::string_view value);

}  // namespace testport::xml
