#include "spsdr/error.hpp"
#include "spsdr/io.hpp"
#include "spsdr/simulate.hpp"

#include "temp_dir.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace spsdr;

namespace {

SpatialSample small_sample(std::uint64_t seed) {
    SimConfig cfg;
    cfg.n = 40;
    cfg.p = 3;
    cfg.seed = seed;
    return make_replication(cfg, 0).full;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an spsdr::Error";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
    const SpatialSample s = small_sample(1);
    const io::Dataset d = io::parse_dataset_csv(io::dataset_csv(s), true);
    EXPECT_EQ(d.coords, s.coords);
    EXPECT_EQ(d.x, s.x);
    ASSERT_TRUE(d.y.has_value());
    EXPECT_EQ(*d.y, s.y);
}

TEST(Csv, WithoutResponse) {
    const io::Dataset d = io::parse_dataset_csv("s1,s2,x1,x2\n0,0,1,2\n1,0,3,4\n");
    EXPECT_FALSE(d.y.has_value());
    EXPECT_EQ(d.x(1, 1), 4.0);
    EXPECT_EQ(code_of([] { io::parse_dataset_csv("s1,s2,x1\n0,0,1\n", true); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] { (void)d.sample(); }), ErrorCode::InvalidArgument);
}

TEST(Csv, MalformedRowReportsRowNumber) {
    const std::string text = "s1,s2,y,x1\n0,0,1,2\n1,1,2\n";
    try {
        io::parse_dataset_csv(text, true);
        FAIL() << "expected ParseError";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
    }
    EXPECT_EQ(code_of([] { io::parse_dataset_csv("s1,s2,y,x1\n0,0,abc,2\n", true); }), ErrorCode::ParseError);
}

TEST(Csv, HeaderRules) {
    EXPECT_EQ(code_of([] { io::parse_dataset_csv("a,b,y,x1\n0,0,1,2\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::parse_dataset_csv("s1,s2,x1,y\n0,0,1,2\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::parse_dataset_csv(""); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::parse_dataset_csv("s1,s2,y,x1\n"); }), ErrorCode::ParseError);
}

TEST(Csv, Predictions) {
    Matrix coords(2, 2);
    coords << 0.5, 0.25, 1.0, 0.0;
    const std::string text = io::predictions_csv(coords, {{1.5, false}, {-2.0, true}});
    EXPECT_EQ(text, "s1,s2,y_hat,fallback_flag\n0.5,0.25,1.5,0\n1,0,-2,1\n");
}

TEST(Csv, ValueColumn) {
    oracle::TempDir dir;
    io::write_file_atomic(dir / "p.csv", "s1,s2,y_hat,fallback_flag\n0,1,2.5,0\n");
    const io::ScoredColumn col = io::read_value_column(dir / "p.csv", {"y_hat"});
    EXPECT_EQ(col.values(0), 2.5);
    EXPECT_EQ(col.coords(0, 1), 1.0);
    EXPECT_EQ(code_of([&] { io::read_value_column(dir / "p.csv", {"y"}); }), ErrorCode::ParseError);
}

TEST(Files, AtomicWriteAndMissingFile) {
    oracle::TempDir dir;
    io::write_file_atomic(dir / "a.txt", "hello\n");
    EXPECT_EQ(io::read_file(dir / "a.txt"), "hello\n");
    EXPECT_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
    EXPECT_EQ(code_of([&] { io::read_file(dir / "none.txt"); }), ErrorCode::IoError);
}

TEST(Files, FormatDouble) {
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_double(2.0), "2");
    EXPECT_EQ(io::format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(io::format_double(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_EQ(io::format_double(std::nan("")), "nan");
}

TEST(ModelFiles, RoundTripIsByteIdentical) {
    oracle::TempDir dir;
    const SpatialSample s = small_sample(2);
    BasisSpec spec;
    for (ModelKind kind : {ModelKind::ind, ModelKind::sscm, ModelKind::sem}) {
        io::ModelFile model;
        model.fit = fit_model(s, kind, spec, 2);
        model.reference = make_reference(s, &*model.fit);
        model.h1 = 0.75;
        model.h2 = 0.125;
        model.seed = 9;
        io::save_model(dir / "m.json", model);
        const std::string first = io::read_file(dir / "m.json");
        const io::ModelFile loaded = io::load_model(dir / "m.json");
        io::save_model(dir / "m2.json", loaded);
        EXPECT_EQ(io::read_file(dir / "m2.json"), first);
        EXPECT_EQ(loaded.fit->est.a_hat, model.fit->est.a_hat);
        EXPECT_EQ(loaded.fit->spatial_param, model.fit->spatial_param);
        EXPECT_EQ(loaded.reference.points, model.reference.points);
        EXPECT_EQ(*loaded.h2, 0.125);
        EXPECT_EQ(loaded.kind_name(), std::string(to_string(kind)));
    }
}

TEST(ModelFiles, IdentityHFitKeepsInfiniteLambda) {
    const SpatialSample s = small_sample(3);
    SscmOptions opts;
    opts.identity_h = true;
    io::ModelFile model;
    model.fit = fit_sscm(s, BasisSpec{}, 1, {1.0}, opts);
    model.reference = make_reference(s, &*model.fit);
    const io::ModelFile back = io::model_from_json(io::Json::parse(io::dump(io::to_json(model))));
    EXPECT_TRUE(std::isinf(back.fit->spatial_param));
}

TEST(ModelFiles, RawPredictorModel) {
    const SpatialSample s = small_sample(4);
    io::ModelFile model;
    model.reference = make_reference(s, nullptr);
    EXPECT_EQ(model.kind_name(), "full");
    const io::ModelFile back = io::model_from_json(io::to_json(model));
    EXPECT_FALSE(back.fit.has_value());
    EXPECT_EQ(back.reference.points, s.x);
}

TEST(ModelFiles, RejectsWrongVersionAndFormat) {
    const SpatialSample s = small_sample(5);
    io::ModelFile model;
    model.reference = make_reference(s, nullptr);
    io::Json j = io::to_json(model);
    j["version"] = 99;
    EXPECT_EQ(code_of([&] { io::model_from_json(j); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::model_from_json(io::Json::object()); }), ErrorCode::ParseError);
}

TEST(Reports, MetricsJson) {
    SimConfig cfg;
    cfg.n = 50;
    cfg.p = 3;
    cfg.reps = 2;
    const MetricsReport r = run_experiment(cfg, {PredictorMode::parse("2k.Ind")}, DPolicy::parse("2"), 1);
    const io::Json j = io::to_json(r);
    EXPECT_EQ(j.at("format"), "spsdr-metrics");
    EXPECT_TRUE(j.contains("config"));
    EXPECT_TRUE(j.contains("summary"));
    EXPECT_TRUE(j.contains("replications"));
    EXPECT_FALSE(j.at("any_unstable").get<bool>());
}
