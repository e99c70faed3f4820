#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "sensorhub/errors.hpp"
#include "sensorhub/repository.hpp"

namespace sensorhub {

// Parsed virtual sensor definition. The XML schema is documented in
// docs/vsd.md:
//
//   <virtual-sensor name="phone1">
//     <address wrapper="android">
//       <predicate key="port">22001</predicate>
//     </address>
//     <storage history-size="1000"/>
//   </virtual-sensor>
//
// One <address> element per stream source, at least one required.
struct VirtualSensorDefinition {
    std::string name;
    std::vector<WrapperConnectionRequest> sources;
    std::size_t history_size = 1000;
};

inline VirtualSensorDefinition parse_vsd(const std::string& xml_text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(xml_text);
    try {
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw LoadError(std::string("malformed VSD XML: ") + e.what());
    }

    const auto root = tree.get_child_optional("virtual-sensor");
    if (!root) {
        throw LoadError("VSD has no <virtual-sensor> root element");
    }

    VirtualSensorDefinition def;
    def.name = root->get<std::string>("<xmlattr>.name", "");
    if (def.name.empty()) {
        throw LoadError("<virtual-sensor> needs a non-empty name attribute");
    }

    for (const auto& [tag, node] : *root) {
        if (tag == "address") {
            WrapperConnectionRequest wcr;
            wcr.wrapper_name = node.get<std::string>("<xmlattr>.wrapper", "");
            if (wcr.wrapper_name.empty()) {
                throw LoadError("VSD '" + def.name +
                                "': <address> needs a non-empty wrapper attribute");
            }
            for (const auto& [child_tag, child] : node) {
                if (child_tag != "predicate") continue;
                auto key = child.get<std::string>("<xmlattr>.key", "");
                if (key.empty()) {
                    throw LoadError("VSD '" + def.name +
                                    "': <predicate> needs a non-empty key attribute");
                }
                wcr.params.emplace_back(std::move(key), child.get_value<std::string>());
            }
            def.sources.push_back(std::move(wcr));
        } else if (tag == "storage") {
            def.history_size = node.get<std::size_t>("<xmlattr>.history-size", def.history_size);
            if (def.history_size == 0) {
                throw LoadError("VSD '" + def.name + "': history-size must be positive");
            }
        }
    }

    if (def.sources.empty()) {
        throw LoadError("VSD '" + def.name + "' has no <address> element");
    }
    return def;
}

inline VirtualSensorDefinition parse_vsd_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LoadError("cannot read VSD file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_vsd(text.str());
}

}  // namespace sensorhub
