#include "jcce/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "jcce/errors.hpp"

namespace jcce {
namespace {

FeatureKind kind_of(const AttributeValue& v) {
    switch (v.index()) {
        case 0: return FeatureKind::categorical_single;
        case 1: return FeatureKind::categorical_multi;
        default: return FeatureKind::numeric;
    }
}

struct SpecBuilder {
    FeatureKind kind;
    std::set<std::string> values;
    double min = 0.0;
    double max = 0.0;
    bool seen_number = false;
};

std::vector<FeatureSpec> build_specs(std::span<const ViewingEvent> log, bool context) {
    std::map<std::string, SpecBuilder> builders;
    for (const auto& event : log) {
        const auto& attrs = context ? event.context : event.item;
        for (const auto& [name, value] : attrs) {
            const FeatureKind kind = kind_of(value);
            auto [it, inserted] = builders.try_emplace(name, SpecBuilder{kind, {}, 0.0, 0.0, false});
            auto& b = it->second;
            if (b.kind != kind) throw DataError("invalid schema: attribute '" + name + "' changes kind");
            if (const auto* s = std::get_if<std::string>(&value)) {
                b.values.insert(*s);
            } else if (const auto* m = std::get_if<std::vector<std::string>>(&value)) {
                b.values.insert(m->begin(), m->end());
            } else {
                const double x = std::get<double>(value);
                if (!std::isfinite(x)) throw DataError("invalid schema: non-finite value for '" + name + "'");
                if (!b.seen_number) {
                    b.min = b.max = x;
                    b.seen_number = true;
                } else {
                    b.min = std::min(b.min, x);
                    b.max = std::max(b.max, x);
                }
            }
        }
    }
    std::vector<FeatureSpec> specs;
    for (auto& [name, b] : builders) {
        FeatureSpec spec;
        spec.name = name;
        spec.kind = b.kind;
        if (b.kind == FeatureKind::numeric) {
            if (!(b.min < b.max)) {
                throw DataError("invalid schema: numeric attribute '" + name + "' is constant");
            }
            spec.min = b.min;
            spec.max = b.max;
        } else {
            if (b.values.empty()) throw DataError("invalid schema: attribute '" + name + "' has no values");
            spec.vocabulary.assign(b.values.begin(), b.values.end());
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::size_t total_width(const std::vector<FeatureSpec>& specs) {
    std::size_t w = 0;
    for (const auto& s : specs) w += s.width();
    return w;
}

std::ptrdiff_t vocab_index(const FeatureSpec& spec, const std::string& value) {
    const auto it = std::lower_bound(spec.vocabulary.begin(), spec.vocabulary.end(), value);
    if (it == spec.vocabulary.end() || *it != value) return -1;
    return it - spec.vocabulary.begin();
}

void append_escaped(std::string& out, const std::string& s) {
    for (char c : s) {
        if (c == '\\' || c == '|' || c == '=' || c == ',' || c == ';') out.push_back('\\');
        out.push_back(c);
    }
}

}  // namespace

std::size_t FeatureSchema::context_width() const { return total_width(context_specs); }
std::size_t FeatureSchema::item_width() const { return total_width(item_specs); }

FeatureSchema build_schema(std::span<const ViewingEvent> training_log) {
    if (training_log.empty()) throw DataError("build_schema: empty training log");
    FeatureSchema schema;
    schema.context_specs = build_specs(training_log, true);
    schema.item_specs = build_specs(training_log, false);
    if (schema.item_specs.empty()) throw DataError("build_schema: events carry no item attributes");
    if (schema.context_specs.empty()) throw DataError("build_schema: events carry no context attributes");
    return schema;
}

void vectorize_attributes_into(const Attributes& attributes, std::span<const FeatureSpec> specs,
                               Eigen::Ref<Vector> out) {
    std::size_t width = 0;
    for (const auto& s : specs) width += s.width();
    if (static_cast<std::size_t>(out.size()) != width) throw ShapeError("vectorize: output width mismatch");
    out.setZero();

    std::size_t matched = 0;
    std::size_t offset = 0;
    for (const auto& spec : specs) {
        const auto it = attributes.find(spec.name);
        if (it != attributes.end()) {
            ++matched;
            const AttributeValue& value = it->second;
            const auto base = static_cast<Eigen::Index>(offset);
            switch (spec.kind) {
                case FeatureKind::categorical_single: {
                    const auto* s = std::get_if<std::string>(&value);
                    if (!s) throw DataError("vectorize: attribute '" + spec.name + "' must be a single category");
                    const auto idx = vocab_index(spec, *s);
                    if (idx >= 0) out[base + idx] = 1.0;
                    break;
                }
                case FeatureKind::categorical_multi: {
                    std::vector<std::string> single;
                    const std::vector<std::string>* values = std::get_if<std::vector<std::string>>(&value);
                    if (!values) {
                        const auto* s = std::get_if<std::string>(&value);
                        if (!s) throw DataError("vectorize: attribute '" + spec.name + "' must be categorical");
                        single.push_back(*s);
                        values = &single;
                    }
                    std::size_t hits = 0;
                    for (const auto& v : *values) {
                        const auto idx = vocab_index(spec, v);
                        if (idx >= 0 && out[base + idx] == 0.0) {
                            out[base + idx] = 1.0;
                            ++hits;
                        }
                    }
                    if (hits > 0) {
                        // Scale to 1/hits, then give the last hit the remainder so the
                        // block sums to exactly 1 in index order.
                        const auto width = static_cast<Eigen::Index>(spec.width());
                        out.segment(base, width) /= static_cast<double>(hits);
                        Eigen::Index last = 0;
                        double head = 0.0;
                        for (Eigen::Index k = 0; k < width; ++k) {
                            if (out[base + k] != 0.0) last = k;
                        }
                        for (Eigen::Index k = 0; k < last; ++k) head += out[base + k];
                        out[base + last] = 1.0 - head;
                    }
                    break;
                }
                case FeatureKind::numeric: {
                    const auto* x = std::get_if<double>(&value);
                    if (!x) throw DataError("vectorize: attribute '" + spec.name + "' must be numeric");
                    if (!std::isfinite(*x)) throw DataError("vectorize: non-finite value for '" + spec.name + "'");
                    out[base] = std::clamp((*x - spec.min) / (spec.max - spec.min), 0.0, 1.0);
                    break;
                }
            }
        }
        offset += spec.width();
    }
    if (matched != attributes.size()) {
        for (const auto& [name, _] : attributes) {
            const bool known = std::any_of(specs.begin(), specs.end(),
                                           [&](const FeatureSpec& s) { return s.name == name; });
            if (!known) throw DataError("vectorize: unknown attribute '" + name + "'");
        }
    }
}

Vector vectorize_attributes(const Attributes& attributes, std::span<const FeatureSpec> specs) {
    std::size_t width = 0;
    for (const auto& s : specs) width += s.width();
    Vector out(static_cast<Eigen::Index>(width));
    vectorize_attributes_into(attributes, specs, out);
    return out;
}

Vector vectorize_context(const ViewingEvent& event, const FeatureSchema& schema) {
    return vectorize_attributes(event.context, schema.context_specs);
}

Vector vectorize_item(const Attributes& item_attributes, const FeatureSchema& schema) {
    return vectorize_attributes(item_attributes, schema.item_specs);
}

Matrix vectorize_contexts(std::span<const ViewingEvent> log, std::span<const std::size_t> rows,
                          const FeatureSchema& schema) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(schema.context_width()));
    Vector buf(out.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        vectorize_attributes_into(log[rows[r]].context, schema.context_specs, buf);
        out.row(static_cast<Eigen::Index>(r)) = buf.transpose();
    }
    return out;
}

Matrix vectorize_items(std::span<const ViewingEvent> log, std::span<const std::size_t> rows,
                       const FeatureSchema& schema) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(schema.item_width()));
    Vector buf(out.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        vectorize_attributes_into(log[rows[r]].item, schema.item_specs, buf);
        out.row(static_cast<Eigen::Index>(r)) = buf.transpose();
    }
    return out;
}

std::string canonical_key(const Attributes& attributes) {
    std::string key;
    for (const auto& [name, value] : attributes) {
        append_escaped(key, name);
        key.push_back('=');
        if (const auto* s = std::get_if<std::string>(&value)) {
            key.push_back('s');
            append_escaped(key, *s);
        } else if (const auto* m = std::get_if<std::vector<std::string>>(&value)) {
            key.push_back('m');
            std::vector<std::string> sorted = *m;
            std::sort(sorted.begin(), sorted.end());
            sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
            for (std::size_t i = 0; i < sorted.size(); ++i) {
                if (i) key.push_back(',');
                append_escaped(key, sorted[i]);
            }
        } else {
            key.push_back('n');
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof(buf), std::get<double>(value));
            key.append(buf, res.ptr);
        }
        key.push_back(';');
    }
    return key;
}

}  // namespace jcce
