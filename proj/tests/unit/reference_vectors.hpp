// Generated by tests/vectors/gen_vectors.py. Do not edit.
#pragma once

namespace ref {

inline constexpr const char* kPixel1x1Canonical =
    "424d5058010100000001000000000000000000";
inline constexpr const char* kPixel1x1Sha256 =
    "aa7748107d93f9971ed20275baea3aa66657e987a3fc560a6e26d9ab2d2da183";
inline constexpr const char* kSha256Abc =
    "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";
inline constexpr const char* kNonce =
    "000102030405060708090a0b0c0d0e0f";
inline constexpr const char* kHmacTimestamp202511 =
    "121bd4a46fb9ce66";
inline constexpr const char* kHmacGeolocation202511 =
    "e98bfa45aa7b1c89";
inline constexpr const char* kHmacOwnerAlice =
    "d1b97e77bbfb8e30";
inline constexpr const char* kGcmKey =
    "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";
inline constexpr const char* kGcmPlaintext =
    "4111f12e511a402c17a1f733cf8f0597391f17a7b19e79dcc8f655182e46fefe";
inline constexpr const char* kGcmToken =
    "090a2f4828f316b229c3a8db15ea6f6a7bdd11ad3af28aae6f27f950d5e55bb68ad2014e73e365fede49379c334161c06465666768696a6b6c6d6e6f";
inline constexpr const char* kEcdsaSeed =
    "94f784e7b67f3fe7b8581dcce371b2f5b74b8fc97983efaa0d0b337f4a9672ae";
inline constexpr const char* kEcdsaPublic =
    "044b1b160a6dfc4b1868c78365527c1115a733d27cfa9d07c247b6fa78e7308a1b9fff5c2334e0d480893032f474de38c25516fe89f0036d956994031a2c4e6967";
inline constexpr const char* kEcdsaSignature =
    "4ff2a56ad3238f8dad65c8e40803d588fda1cc1a37d8d9dd3c2d02ed7489f298f348ed7ad883269df8b0531a7d638eb89a20028cd4ff08b89039eb86d84a5d45";
inline constexpr const char* kRecordEncoding =
    "6105d6cc76af400325e94d588ce511be5bfdbb73b437dc51eca43917d7a43e3dc1e47125968b3b71049fbc4802d1e40a71ea1359decfabacf70b34588037d4ff0c010101010101010102020202020202020303030303030303";
inline constexpr const char* kRecordHash =
    "21a165924f2f6b3633281c5ad80eb3a7f5d51dee03f7680c0b4e572d896d4afc";
inline constexpr const char* kChainPayload =
    "6105d6cc76af400325e94d588ce511be5bfdbb73b437dc51eca43917d7a43e3dc1e47125968b3b71049fbc4802d1e40a71ea1359decfabacf70b34588037d4ff0c010101010101010102020202020202020303030303030303136e6f64652d65752d312f6e6f64652d75732d3360f12c00";
inline constexpr const char* kChainEnvelope =
    "71000101000000000000000000000000000000000000000000000000000000000000000000000000";
inline constexpr const char* kChainLink =
    "0625433831b47801cdee8a7ab4135523bff44e2b1e11c48a9db52de67054c101";

}  // namespace ref
