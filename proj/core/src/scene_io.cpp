#include <fstream>
#include <sstream>

#include "v2xdose/errors.hpp"
#include "v2xdose/scene.hpp"

namespace v2xdose {

namespace {

enum class Section { None, Scene, Materials, Surfaces, Boxes, Foliage };

class LineReader {
  public:
    LineReader(std::string_view source, int line, std::string_view text) : source_(source), line_(line) {
        std::istringstream is{std::string(text)};
        std::string tok;
        while (is >> tok) tokens_.push_back(tok);
    }

    std::size_t size() const { return tokens_.size(); }
    const std::string& word(std::size_t i) const { return tokens_.at(i); }

    double number(std::size_t i) const {
        const std::string& s = tokens_.at(i);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            fail("expected a number, got '" + s + "'");
        }
        if (used != s.size()) fail("expected a number, got '" + s + "'");
        return v;
    }

    Vec3 point(std::size_t i) const { return {number(i), number(i + 1), number(i + 2)}; }

    void expect_count(std::size_t lo, std::size_t hi, std::string_view what) const {
        if (tokens_.size() < lo || tokens_.size() > hi) {
            fail(std::string(what) + ": expected " + std::to_string(lo) +
                 (lo == hi ? "" : "-" + std::to_string(hi)) + " fields, got " + std::to_string(tokens_.size()));
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(std::string(source_) + ":" + std::to_string(line_) + ": " + msg);
    }

  private:
    std::string_view source_;
    int line_;
    std::vector<std::string> tokens_;
};

SurfaceTag parse_tag(const LineReader& r, const std::string& s) {
    if (s == "building_wall") return SurfaceTag::BuildingWall;
    if (s == "terrain") return SurfaceTag::Terrain;
    if (s == "pavement") return SurfaceTag::Pavement;
    if (s == "vehicle_part") return SurfaceTag::VehiclePart;
    if (s == "other") return SurfaceTag::Other;
    r.fail("unknown surface tag '" + s + "'");
}

}  // namespace

SceneDescription parse_scene_text(std::string_view text, std::string_view source_name) {
    SceneDescription desc;
    Section section = Section::None;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos) continue;
        line = line.substr(first);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) {
            line.remove_suffix(1);
        }

        if (line.front() == '[') {
            if (line == "[scene]") section = Section::Scene;
            else if (line == "[materials]") section = Section::Materials;
            else if (line == "[surfaces]") section = Section::Surfaces;
            else if (line == "[boxes]") section = Section::Boxes;
            else if (line == "[foliage]") section = Section::Foliage;
            else throw ParseError(std::string(source_name) + ":" + std::to_string(line_no) +
                                  ": unknown section " + std::string(line));
            continue;
        }

        const LineReader r(source_name, line_no, line);
        switch (section) {
            case Section::None:
                r.fail("content outside of any section");
            case Section::Scene:
                r.expect_count(2, 2, "scene setting");
                if (r.word(0) != "frequency_hz") r.fail("unknown scene setting '" + r.word(0) + "'");
                desc.frequency_hz = r.number(1);
                break;
            case Section::Materials: {
                if (r.size() < 2) r.fail("material: expected name and kind");
                Material m;
                m.name = r.word(0);
                const std::string& kind = r.word(1);
                if (kind == "PEC") {
                    r.expect_count(2, 2, "PEC material");
                    m.kind = MaterialKind::PerfectConductor;
                } else if (kind == "DHS" || kind == "BIOPHYSICAL") {
                    r.expect_count(4, 4, "material");
                    m.kind = kind == "DHS" ? MaterialKind::DielectricHalfSpace : MaterialKind::Biophysical;
                    m.conductivity = r.number(2);
                    m.rel_permittivity = r.number(3);
                } else if (kind == "OLD") {
                    r.expect_count(4, 5, "OLD material");
                    m.kind = MaterialKind::OneLayerDielectric;
                    m.conductivity = r.number(2);
                    m.rel_permittivity = r.number(3);
                    m.thickness = r.size() == 5 ? r.number(4) : kDefaultSlabThickness;
                } else {
                    r.fail("unknown material kind '" + kind + "'");
                }
                desc.materials.push_back(std::move(m));
                break;
            }
            case Section::Surfaces: {
                if (r.size() != 11 && r.size() != 14) r.fail("surface: expected tag, material and 3 or 4 vertices");
                PolygonSpec p;
                p.tag = parse_tag(r, r.word(0));
                p.material = r.word(1);
                for (std::size_t i = 2; i < r.size(); i += 3) p.vertices.push_back(r.point(i));
                desc.polygons.push_back(std::move(p));
                break;
            }
            case Section::Boxes: {
                r.expect_count(8, 8, "box");
                BoxSpec b;
                b.tag = parse_tag(r, r.word(0));
                b.material = r.word(1);
                b.lo = r.point(2);
                b.hi = r.point(5);
                desc.boxes.push_back(std::move(b));
                break;
            }
            case Section::Foliage: {
                if (r.size() == 0) break;
                if (r.word(0) == "cylinder") {
                    r.expect_count(6, 6, "cylinder");
                    desc.foliage.push_back(
                        FoliageVolume::cylinder(r.number(1), r.number(2), r.number(3), r.number(4), r.number(5)));
                } else if (r.word(0) == "box") {
                    r.expect_count(7, 7, "foliage box");
                    desc.foliage.push_back(FoliageVolume::make_box(r.point(1), r.point(4)));
                } else {
                    r.fail("unknown foliage shape '" + r.word(0) + "'");
                }
                break;
            }
        }
    }
    return desc;
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open scene file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return Scene::build(parse_scene_text(ss.str(), path.string()));
}

}  // namespace v2xdose
