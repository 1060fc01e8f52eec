// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "nrod/dataset.hpp"

using namespace nrod;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
}

bool mentions(const std::exception& e, const std::string& needle) {
    return std::string(e.what()).find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("csv with header and label column") {
    const fs::path p = write_file("ds_basic.csv", "a,b,label\n1,2,0\n3.5,-4,1\n");
    const LabeledDataset ds = load_csv(p, true, std::string("label"));
    CHECK(ds.data.rows == 2);
    CHECK(ds.data.cols == 2);
    CHECK(ds.data.at(0, 0) == 1.0);
    CHECK(ds.data.at(1, 0) == 3.5);
    CHECK(ds.data.at(1, 1) == -4.0);
    CHECK(ds.labels == std::vector<int>{0, 1});
    CHECK(ds.names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("csv without header or labels") {
    const fs::path p = write_file("ds_nohdr.csv", "1,2\n3,4\n5,6\n");
    const LabeledDataset ds = load_csv(p, false);
    CHECK(ds.data.rows == 3);
    CHECK(ds.data.cols == 2);
    CHECK_FALSE(ds.has_labels());
    CHECK(ds.names.empty());
}

TEST_CASE("csv crlf line endings") {
    const fs::path p = write_file("ds_crlf.csv", "a,b\r\n1,2\r\n3,4\r\n");
    const LabeledDataset ds = load_csv(p, true);
    CHECK(ds.data.rows == 2);
    CHECK(ds.data.at(1, 1) == 4.0);
}

TEST_CASE("csv errors") {
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_csv("no_such_file.csv", true), DataError);
    }
    SUBCASE("bad cell names its position") {
        const fs::path p = write_file("ds_bad.csv", "a,b\n1,2\n3,oops\n");
        try {
            load_csv(p, true);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(mentions(e, "oops"));
            CHECK(mentions(e, "2"));  // column 2
        }
    }
    SUBCASE("non-binary label") {
        const fs::path p = write_file("ds_lab2.csv", "a,label\n1,0\n2,2\n");
        CHECK_THROWS_AS(load_csv(p, true, std::string("label")), DataError);
    }
    SUBCASE("label column absent") {
        const fs::path p = write_file("ds_nolab.csv", "a,b\n1,2\n");
        CHECK_THROWS_AS(load_csv(p, true, std::string("label")), DataError);
    }
    SUBCASE("ragged row") {
        const fs::path p = write_file("ds_ragged.csv", "a,b\n1,2\n3\n");
        CHECK_THROWS_AS(load_csv(p, true), DataError);
    }
    SUBCASE("non-finite value") {
        const fs::path p = write_file("ds_inf.csv", "a,b\n1,inf\n");
        CHECK_THROWS_AS(load_csv(p, true), DataError);
    }
    SUBCASE("empty file") {
        const fs::path p = write_file("ds_empty.csv", "");
        CHECK_THROWS_AS(load_csv(p, true), DataError);
    }
}

TEST_CASE("arff loading") {
    const std::string arff =
        "% a comment\r\n"
        "@RELATION demo\n"
        "@attribute id numeric\n"
        "@ATTRIBUTE 'att 1' REAL\n"
        "@attribute att2 integer\n"
        "@attribute outlier {'no','yes'}\n"
        "\n"
        "@data\n"
        "1, 0.5, 2, 'no'\n"
        "2, 1.5, 4, 'yes'\n"
        "% trailing comment\n"
        "3, 2.5, 6, 'no'\n";
    const fs::path p = write_file("ds_demo.arff", arff);

    SUBCASE("default id exclusion and label mapping") {
        const LabeledDataset ds = load_arff(p, "outlier", "yes", {"id"});
        CHECK(ds.data.rows == 3);
        CHECK(ds.data.cols == 2);  // id excluded, outlier is the label
        CHECK(ds.names == std::vector<std::string>{"att 1", "att2"});
        CHECK(ds.data.at(1, 0) == 1.5);
        CHECK(ds.labels == std::vector<int>{0, 1, 0});
    }
    SUBCASE("load_auto dispatches on extension") {
        const LabeledDataset ds = load_auto(p);  // defaults: outlier/yes, id excluded
        CHECK(ds.data.cols == 2);
        CHECK(ds.labels == std::vector<int>{0, 1, 0});
    }
    SUBCASE("missing label attribute is reported by name") {
        const fs::path q = write_file("ds_numeric.arff",
                                      "@relation r\n@attribute a numeric\n@data\n1\n");
        try {
            load_arff(q, "class", "yes");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(mentions(e, "class"));
        }
    }
}

TEST_CASE("arff rejections") {
    SUBCASE("sparse rows") {
        const fs::path p = write_file("ds_sparse.arff",
                                      "@relation r\n@attribute a numeric\n"
                                      "@attribute outlier {no,yes}\n@data\n{0 1.5}\n");
        CHECK_THROWS_AS(load_arff(p, "outlier", "yes"), DataError);
    }
    SUBCASE("stray nominal attribute") {
        const fs::path p = write_file("ds_nominal.arff",
                                      "@relation r\n@attribute color {red,blue}\n"
                                      "@attribute outlier {no,yes}\n@data\nred,no\n");
        CHECK_THROWS_AS(load_arff(p, "outlier", "yes"), DataError);
    }
    SUBCASE("wrong arity row names its line") {
        const fs::path p = write_file("ds_arity.arff",
                                      "@relation r\n@attribute a numeric\n"
                                      "@attribute outlier {no,yes}\n@data\n1,no\n2\n");
        try {
            load_arff(p, "outlier", "yes");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(mentions(e, "6"));
        }
    }
}

TEST_CASE("load_auto csv label autodetection") {
    SUBCASE("column named label is picked up") {
        const fs::path p = write_file("ds_auto1.csv", "x,label\n1,0\n2,1\n");
        const LabeledDataset ds = load_auto(p);
        CHECK(ds.has_labels());
        CHECK(ds.data.cols == 1);
    }
    SUBCASE("no label column means no labels") {
        const fs::path p = write_file("ds_auto2.csv", "x,y\n1,2\n3,4\n");
        const LabeledDataset ds = load_auto(p);
        CHECK_FALSE(ds.has_labels());
        CHECK(ds.data.cols == 2);
    }
    SUBCASE("explicit label attribute wins") {
        const fs::path p = write_file("ds_auto3.csv", "x,y\n1,0\n3,1\n");
        LoadOptions opts;
        opts.label_attribute = "y";
        const LabeledDataset ds = load_auto(p, opts);
        CHECK(ds.has_labels());
        CHECK(ds.labels == std::vector<int>{0, 1});
    }
}

TEST_CASE("dedupe keeps first occurrences and maps rows") {
    LabeledDataset ds;
    ds.data = Matrix(5, 2);
    const double rows[5][2] = {{1, 2}, {3, 4}, {1, 2}, {5, 6}, {3, 4}};
    for (std::size_t i = 0; i < 5; ++i) ds.data.set_row(i, rows[i]);
    ds.labels = {0, 1, 0, 1, 1};

    const DedupeResult dd = dedupe_indexed(ds);
    CHECK(dd.data.data.rows == 3);
    CHECK(dd.kept_rows == std::vector<std::size_t>{0, 1, 3});
    CHECK(dd.row_to_kept == std::vector<std::size_t>{0, 1, 0, 2, 1});
    CHECK(dd.dropped_rows == std::vector<std::size_t>{2, 4});
    CHECK(dd.data.labels == std::vector<int>{0, 1, 1});
    CHECK(dedupe(ds).data == dd.data.data);
}

TEST_CASE("zscore normalization") {
    LabeledDataset ds;
    ds.data = Matrix(3, 2);
    const double rows[3][2] = {{1, 7}, {2, 7}, {3, 7}};
    for (std::size_t i = 0; i < 3; ++i) ds.data.set_row(i, rows[i]);

    const LabeledDataset z = zscore_normalize(ds);
    CHECK(z.data.at(0, 0) == doctest::Approx(-1.224744871391589).epsilon(1e-12));
    CHECK(z.data.at(1, 0) == doctest::Approx(0.0));
    CHECK(z.data.at(2, 0) == doctest::Approx(1.224744871391589).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i) CHECK(z.data.at(i, 1) == 0.0);  // zero variance
}

TEST_CASE("synth_collective geometry and determinism") {
    const LabeledDataset a = synth_collective(200, 30, 8.0, 0.15, 7);
    const LabeledDataset b = synth_collective(200, 30, 8.0, 0.15, 7);
    const LabeledDataset c = synth_collective(200, 30, 8.0, 0.15, 8);
    CHECK(a.data == b.data);
    CHECK_FALSE(a.data == c.data);
    CHECK(a.size() == 230);
    CHECK(a.dim() == 2);

    std::size_t outliers = 0;
    for (int l : a.labels) outliers += static_cast<std::size_t>(l);
    CHECK(outliers == 30);
    for (std::size_t i = 0; i < 200; ++i) CHECK(a.labels[i] == 0);

    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 200; i < 230; ++i) {
        cx += a.data.at(i, 0);
        cy += a.data.at(i, 1);
    }
    cx /= 30.0;
    cy /= 30.0;
    CHECK(std::sqrt(cx * cx + cy * cy) == doctest::Approx(8.0).epsilon(0.02));

    double spread = 0.0;
    for (std::size_t i = 200; i < 230; ++i) {
        const double dx = a.data.at(i, 0) - cx;
        const double dy = a.data.at(i, 1) - cy;
        spread += dx * dx + dy * dy;
    }
    CHECK(std::sqrt(spread / 60.0) == doctest::Approx(0.15).epsilon(0.3));
}

TEST_CASE("write_csv round trip is exact") {
    const LabeledDataset ds = synth_collective(20, 5, 6.0, 0.2, 3);
    const fs::path p = fs::temp_directory_path() / "ds_roundtrip.csv";
    write_csv(p, ds);
    const LabeledDataset back = load_csv(p, true, std::string("label"));
    CHECK(back.data == ds.data);
    CHECK(back.labels == ds.labels);
}
