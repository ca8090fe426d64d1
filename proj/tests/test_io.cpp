#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "lmf/checkpoint.hpp"
#include "lmf/dataset.hpp"
#include "helpers.hpp"

using namespace lmf;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

}  // namespace

TEST_CASE("pgm/ppm encode-decode round trip is exact on 8-bit grids") {
    Rng rng(91);
    for (int c : {1, 3}) {
        Tensor img(1, c, 5, 7);
        for (std::size_t i = 0; i < img.size(); ++i)
            img.data[i] = static_cast<double>(rng.below(256)) / 255.0;
        const ImageRecord rec = decode_image(encode_image(img), "mem");
        CHECK(rec.pixels.same_shape(img));
        CHECK(rec.maxval == 255);
        CHECK(max_abs_diff(rec.pixels, img) < 1e-15);  // k*(1/255) vs k/255: 1 ulp
        // A second round trip is byte-identical.
        CHECK(encode_image(rec.pixels) == encode_image(img));
    }
}

TEST_CASE("header comments and 16-bit payloads decode correctly") {
    std::vector<std::uint8_t> data = bytes_of("P5 # comment here\n# another\n 2 2\n255\n");
    for (std::uint8_t v : {0, 85, 170, 255}) data.push_back(v);
    const ImageRecord rec = decode_image(data, "mem");
    CHECK(rec.pixels.h == 2);
    CHECK(rec.pixels.w == 2);
    CHECK(rec.pixels.at(0, 0, 0, 1) == doctest::Approx(85.0 / 255.0).epsilon(1e-12));

    // 16-bit big-endian samples, maxval 65535.
    std::vector<std::uint8_t> wide = bytes_of("P5\n2 1\n65535\n");
    wide.insert(wide.end(), {0x00, 0x00, 0xff, 0xff});
    const ImageRecord r16 = decode_image(wide, "mem");
    CHECK(r16.maxval == 65535);
    CHECK(r16.pixels.at(0, 0, 0, 0) == 0.0);
    CHECK(r16.pixels.at(0, 0, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("malformed netpbm inputs raise IoError") {
    CHECK_THROWS_AS(decode_image(bytes_of(""), "mem"), IoError);
    CHECK_THROWS_AS(decode_image(bytes_of("P3\n1 1\n255\n0"), "mem"), IoError);
    CHECK_THROWS_AS(decode_image(bytes_of("P5\n-3 2\n255\n"), "mem"), IoError);
    CHECK_THROWS_AS(decode_image(bytes_of("P5\n2 2\n0\n0000"), "mem"), IoError);
    CHECK_THROWS_AS(decode_image(bytes_of("P5\n2 2\n70000\n"), "mem"), IoError);
    std::vector<std::uint8_t> trunc = bytes_of("P6\n4 4\n255\n");
    trunc.push_back(7);  // 1 of 48 payload bytes
    CHECK_THROWS_AS(decode_image(trunc, "mem"), IoError);
    CHECK_THROWS_AS(decode_image(bytes_of("P5\n2 x\n255\n0000"), "mem"), IoError);
    CHECK_THROWS_AS(load_image("/nonexistent/path.pgm"), IoError);

    Rng rng(92);
    CHECK_THROWS_AS(encode_image(random_tensor(1, 2, 4, 4, rng)), ShapeError);
    CHECK_THROWS_AS(encode_image(random_tensor(2, 1, 4, 4, rng)), ShapeError);
}

TEST_CASE("cifar decode/encode round trip is byte exact for 10 and 100 classes") {
    for (int classes : {10, 100}) {
        auto records = testutil::make_grating_set(6, 93);
        if (classes == 100)
            for (std::size_t i = 0; i < records.size(); ++i)
                records[i].label = static_cast<int>(i * 17 % 100);
        const std::vector<std::uint8_t> wire = encode_cifar(records, classes);
        const std::size_t rec_size = (classes == 100 ? 2 : 1) + 3072;
        CHECK(wire.size() == records.size() * rec_size);
        const auto back = decode_cifar(wire, classes, "mem");
        REQUIRE(back.size() == records.size());
        for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].label == records[i].label);
        CHECK(encode_cifar(back, classes) == wire);
    }
}

TEST_CASE("malformed cifar payloads raise typed errors") {
    CHECK_THROWS_AS(decode_cifar({}, 10, "mem"), IoError);
    std::vector<std::uint8_t> bad(3073 + 5, 0);  // not a record multiple
    CHECK_THROWS_AS(decode_cifar(bad, 10, "mem"), IoError);
    std::vector<std::uint8_t> label(3073, 0);
    label[0] = 200;  // label out of range for CIFAR-10
    CHECK_THROWS_AS(decode_cifar(label, 10, "mem"), IoError);
    CHECK_THROWS_AS(decode_cifar(std::vector<std::uint8_t>(3073, 0), 37, "mem"), ConfigError);
}

TEST_CASE("lmft round trip: f64 bitwise, f32 lossy, typed failure modes") {
    Rng rng(94);
    const Tensor t = random_tensor(2, 3, 4, 5, rng);
    const auto wire = lmft_encode(t, true);
    std::size_t consumed = 0;
    const Tensor back = lmft_decode(wire.data(), wire.size(), &consumed);
    CHECK(consumed == wire.size());
    CHECK(back.same_shape(t));
    CHECK(max_abs_diff(back, t) == 0.0);  // bitwise: doubles survive unchanged
    CHECK(lmft_encode(back, true) == wire);

    const auto wire32 = lmft_decode(lmft_encode(t, false).data(), lmft_encode(t, false).size());
    CHECK(max_abs_diff(wire32, t) < 1e-6);

    auto corrupt = wire;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(lmft_decode(corrupt.data(), corrupt.size()), IoError);
    corrupt = wire;
    corrupt[4] = 9;  // version
    CHECK_THROWS_AS(lmft_decode(corrupt.data(), corrupt.size()), IoError);
    corrupt = wire;
    corrupt[6] = 7;  // dtype
    CHECK_THROWS_AS(lmft_decode(corrupt.data(), corrupt.size()), IoError);
    corrupt = wire;
    corrupt[7] = 2;  // rank
    CHECK_THROWS_AS(lmft_decode(corrupt.data(), corrupt.size()), IoError);
    corrupt = wire;
    corrupt[11] = 0xff;  // implausible dim
    CHECK_THROWS_AS(lmft_decode(corrupt.data(), corrupt.size()), IoError);
    CHECK_THROWS_AS(lmft_decode(wire.data(), wire.size() - 3), IoError);
    CHECK_THROWS_AS(lmft_decode(wire.data(), 6), IoError);

    const auto dir = testutil::scratch_dir("lmft");
    lmft_save(t, (dir / "t.lmft").string());
    CHECK(max_abs_diff(lmft_load((dir / "t.lmft").string()), t) == 0.0);
    auto padded = wire;
    padded.push_back(0);
    write_file((dir / "pad.lmft").string(), padded);
    CHECK_THROWS_AS(lmft_load((dir / "pad.lmft").string()), IoError);
}

TEST_CASE("dataset pairing matches stems and warns about orphans") {
    const auto dir = testutil::scratch_dir("pairing");
    auto fx = testutil::make_sod_fixture(3, 16, 95);
    testutil::write_sod_fixture(fx, dir);
    save_image(fx.images[0], (dir / "images" / "orphan.ppm").string());
    save_image(fx.masks[0], (dir / "masks" / "widow.pgm").string());

    const SodPairing pairing =
        pair_sod_dataset((dir / "images").string(), (dir / "masks").string());
    CHECK(pairing.pairs.size() == 3);
    REQUIRE(pairing.warnings.size() == 2);
    CHECK(pairing.warnings[0].find("orphan") != std::string::npos);
    CHECK(pairing.warnings[1].find("widow") != std::string::npos);

    CHECK_THROWS_AS(pair_sod_dataset((dir / "nope").string(), (dir / "masks").string()), IoError);
}

TEST_CASE("load_mask binarizes and reports soft pixels") {
    const auto dir = testutil::scratch_dir("mask");
    Tensor soft(1, 1, 4, 4);
    soft.data = {0, 0, 1, 1, 0.4, 0.6, 1, 0, 0, 1, 0.2, 0.9, 1, 1, 0, 0};
    save_image(soft, (dir / "m.pgm").string());
    bool had_soft = false;
    const Tensor mask = load_mask((dir / "m.pgm").string(), &had_soft);
    CHECK(had_soft);
    for (double v : mask.data) CHECK((v == 0.0 || v == 1.0));
    CHECK(mask.data[4] == 0.0);  // 0.4 rounds down
    CHECK(mask.data[5] == 1.0);  // 0.6 rounds up

    Tensor hard(1, 1, 2, 2);
    hard.data = {0, 1, 1, 0};
    save_image(hard, (dir / "h.pgm").string());
    load_mask((dir / "h.pgm").string(), &had_soft);
    CHECK_FALSE(had_soft);
}

TEST_CASE("bilinear resize: identity, constants, and 2x agreement with upsample2") {
    Rng rng(96);
    const Tensor img = random_tensor(1, 3, 6, 8, rng, 0.0, 1.0);
    CHECK(max_abs_diff(resize_bilinear(img, 6, 8), img) == 0.0);

    Tensor flat(1, 1, 5, 5, 0.7);
    const Tensor up = resize_bilinear(flat, 13, 9);
    for (double v : up.data) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));

    const Tensor a = resize_bilinear(img, 12, 16);
    const Tensor b = upsample2_forward(img);
    CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("to_channels replicates and averages") {
    Rng rng(97);
    const Tensor gray = random_tensor(1, 1, 4, 4, rng, 0.0, 1.0);
    const Tensor rgb = to_channels(gray, 3);
    CHECK(rgb.c == 3);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 16; ++i)
            CHECK(rgb.data[c * 16 + i] == gray.data[i]);
    const Tensor back = to_channels(rgb, 1);
    CHECK(max_abs_diff(back, gray) < 1e-12);
}

TEST_CASE("load_sod_dataset resizes, converts channels, re-binarizes masks") {
    const auto dir = testutil::scratch_dir("sodload");
    auto fx = testutil::make_sod_fixture(4, 20, 98);
    testutil::write_sod_fixture(fx, dir);
    // Give one mask soft values so the binarization warning fires.
    Tensor soft = fx.masks[0];
    for (double& v : soft.data) v = v == 1.0 ? 0.7 : 0.2;
    save_image(soft, (dir / "masks" / "s0.pgm").string());
    std::vector<std::string> warnings;
    const auto data =
        load_sod_dataset((dir / "images").string(), (dir / "masks").string(), 16, 16, 3, &warnings);
    REQUIRE(data.size() == 4);
    for (const SodSample& s : data) {
        CHECK(s.image.c == 3);
        CHECK(s.image.h == 16);
        CHECK(s.mask.h == 16);
        for (double v : s.mask.data) CHECK((v == 0.0 || v == 1.0));
        CHECK_FALSE(s.stem.empty());
    }
    // Resized soft masks are re-binarized with a warning.
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("stack_batch concatenates along the batch dimension") {
    Rng rng(99);
    const Tensor a = random_tensor(1, 2, 3, 3, rng), b = random_tensor(1, 2, 3, 3, rng);
    const Tensor s = stack_batch({&a, &b});
    CHECK(s.n == 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(s.data[i] == a.data[i]);
        CHECK(s.data[a.size() + i] == b.data[i]);
    }
    const Tensor odd = random_tensor(1, 2, 4, 3, rng);
    CHECK_THROWS_AS(stack_batch({&a, &odd}), ShapeError);
}

TEST_CASE("checkpoint round trip restores parameters and running stats bitwise") {
    const auto dir = testutil::scratch_dir("ckpt");
    LmfNet net = build_network(tiny_classifier_config(10), 17);
    // Push the running statistics away from their init values.
    Rng rng(100);
    NetCache cache;
    net.forward(random_tensor(4, 3, 32, 32, rng, 0.0, 1.0), true, cache);

    const std::string path = (dir / "net.lmfc").string();
    save_checkpoint(net, path);
    LmfNet back = load_checkpoint(path);

    auto pa = net.named_params(), pb = back.named_params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].first == pb[i].first);
        CHECK(max_abs_diff(pa[i].second->value, pb[i].second->value) == 0.0);
    }
    auto na = net.named_norms(), nb = back.named_norms();
    for (std::size_t i = 0; i < na.size(); ++i) {
        CHECK(na[i].second->state.running_mean == nb[i].second->state.running_mean);
        CHECK(na[i].second->state.running_var == nb[i].second->state.running_var);
    }
    const Tensor probe = random_tensor(2, 3, 32, 32, rng, 0.0, 1.0);
    CHECK(max_abs_diff(net.forward_eval(probe), back.forward_eval(probe)) == 0.0);

    // Saving the loaded network reproduces the file byte for byte.
    const std::string path2 = (dir / "net2.lmfc").string();
    save_checkpoint(back, path2);
    CHECK(read_file(path) == read_file(path2));

    auto bytes = read_file(path);
    bytes[0] = 'X';
    write_file((dir / "bad.lmfc").string(), bytes);
    CHECK_THROWS_AS(load_checkpoint((dir / "bad.lmfc").string()), IoError);
    bytes = read_file(path);
    bytes.push_back(0);
    write_file((dir / "pad.lmfc").string(), bytes);
    CHECK_THROWS_AS(load_checkpoint((dir / "pad.lmfc").string()), IoError);
}
