import json
import os
from dataclasses import replace

import pytest
from hypothesis import HealthCheck, given, settings

from jnismells.binding import build_model, load_codebase
from jnismells.lexer import count_loc
from jnismells.rules import (
    DETECTORS,
    ConfigError,
    DetectionConfig,
    SmellType,
    detect_all,
    load_config,
)
from jnismells.source_facts import SourceFile, language_for
from model_gen import COUNTING_THRESHOLDS, random_models

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
LISTINGS = os.path.join(FIXTURES, "listings")
with open(os.path.join(LISTINGS, "ledger.json"), encoding="utf-8") as fh:
    LEDGER = json.load(fh)

S = SmellType


def model_of(files: dict[str, str], diagnostics=None):
    sources = [(SourceFile(p, language_for(p), count_loc(t)), t) for p, t in files.items()]
    return build_model(sources, "", diagnostics)


def smells(files: dict[str, str], config: DetectionConfig | None = None, diagnostics=None):
    return detect_all(model_of(files, diagnostics), config, diagnostics)


def types(occs) -> list[str]:
    return sorted(o.smell_type.value for o in occs)


def as_ledger(occs) -> list[tuple]:
    return sorted((o.smell_type.value, o.file_path, o.line, o.param_name) for o in occs)


@pytest.mark.parametrize("name", sorted(LEDGER))
def test_listing_ledger(name):
    occs = detect_all(load_codebase(os.path.join(LISTINGS, name)))
    expected = sorted((e["smell_type"], e["file"], e["line"], e["parameter"]) for e in LEDGER[name])
    assert as_ledger(occs) == expected


def test_listing1_plus_listing8():
    files = {}
    for sub, name in (("listing01", "char_field.c"), ("listing08", "utf_chars.cpp")):
        with open(os.path.join(LISTINGS, sub, name), encoding="utf-8") as f:
            files[name] = f.read()
    assert types(smells(files)) == ["MemoryManagementMismatch", "NotHandlingExceptions", "NotHandlingExceptions"]


def test_listing11_parameter():
    occs = detect_all(load_codebase(os.path.join(LISTINGS, "listing11")))
    assert [(o.smell_type, o.param_name) for o in occs] == [(S.UNUSED_PARAMETERS, "acceleration")]


# --- per-rule examples -----------------------------------------------------

def fn(body: str, params: str = "jobject obj", name: str = "f") -> str:
    return f"#include <jni.h>\njint {name}(JNIEnv *env, jclass self, {params}) {{\n{body}\n    return 0;\n}}\n"


def test_rule1_checked_with_throw_and_return():
    body = """    jclass c = (*env)->FindClass(env, "x/Y");
    if (c == NULL) {
        (*env)->ThrowNew(env, c, "missing");
        return -1;
    }"""
    assert smells({"a.c": fn(body)}) == []
    assert smells({}) == []


def test_rule2_needs_return_or_escape():
    unchecked = '    jclass c = (*env)->FindClass(env, "x/Y");\n'
    assert types(smells({"a.c": fn(unchecked)})) == ["NotHandlingExceptions"]
    returned = "#include <jni.h>\njclass g(JNIEnv *env) {\n" + unchecked + "    return c;\n}\n"
    assert types(smells({"a.c": returned})) == ["AssumingSafeReturnValue", "NotHandlingExceptions"]
    checked = ("#include <jni.h>\njclass g(JNIEnv *env) {\n" + unchecked
               + "    if (c == NULL) { return NULL; }\n    return c;\n}\n")
    assert smells({"a.c": checked}) == []


def loader(body: str, name: str = "L") -> str:
    return f"class {name} {{\n  static {{\n{body}\n  }}\n}}\n"


def test_rules3_to_5_library_loading():
    assert types(smells({"L.java": loader('System.loadLibrary("foo");')})) == ["NotSecuringLibraries"]
    absolute = types(smells({"L.java": loader('System.load("/usr/lib/libfoo.so");')}))
    assert absolute == ["NotSecuringLibraries", "NotUsingRelativePath"]
    diags = []
    dynamic = smells({"L.java": loader("String p = base + name;\nSystem.load(p);")}, diagnostics=diags)
    assert S.NOT_USING_RELATIVE_PATH not in {o.smell_type for o in dynamic}
    assert any("run time" in d.reason for d in diags)


def test_rule4_os_conditional_and_single_load():
    hard = """try { System.loadLibrary("a"); } catch (UnsatisfiedLinkError e) { System.loadLibrary("b"); }"""
    assert S.HARD_CODING_LIBRARIES in {o.smell_type for o in smells({"L.java": loader(hard)})}
    guarded = ('if (System.getProperty("os.name").startsWith("Linux")) {\n' + hard + "\n}")
    assert S.HARD_CODING_LIBRARIES not in {o.smell_type for o in smells({"L.java": loader(guarded)})}
    single = 'System.loadLibrary("a");'
    assert S.HARD_CODING_LIBRARIES not in {o.smell_type for o in smells({"L.java": loader(single)})}


def natives_class(pkg: str, cls: str, n: int, prefix: str = "m") -> str:
    decls = "".join(f"    static native void {prefix}{i}();\n" for i in range(n))
    return f"package {pkg};\npublic class {cls} {{\n{decls}}}\n"


def caller(pkg: str, cls: str, targets: list[str]) -> str:
    calls = "".join(f"        {t}();\n" for t in targets)
    return f"package {pkg};\npublic class {cls} {{\n    void go() {{\n{calls}    }}\n}}\n"


def test_rule6_clustering():
    big = natives_class("p", "Big", 29)
    used = caller("p", "Use", [f"Big.m{i}" for i in range(29)])
    assert S.TOO_MUCH_CLUSTERING in {o.smell_type for o in smells({"Big.java": big, "Use.java": used})}
    seven = natives_class("p", "Big", 7)
    used7 = caller("p", "Use", [f"Big.m{i}" for i in range(7)])
    assert S.TOO_MUCH_CLUSTERING not in {o.smell_type for o in smells({"Big.java": seven, "Use.java": used7})}
    eight = natives_class("p", "Big", 8)
    assert S.TOO_MUCH_CLUSTERING not in {o.smell_type for o in smells({"Big.java": eight})}


def test_rule7_scattering():
    three = {f"{c}.java": natives_class("p", c, 2) for c in "ABC"}
    occs = [o for o in smells(three) if o.smell_type is S.TOO_MUCH_SCATTERING]
    assert sorted(o.file_path for o in occs) == ["A.java", "B.java", "C.java"]
    two = {f"{c}.java": natives_class("p", c, 2) for c in "AB"}
    assert S.TOO_MUCH_SCATTERING not in {o.smell_type for o in smells(two)}
    three["C.java"] = natives_class("p", "C", 9)
    assert S.TOO_MUCH_SCATTERING not in {o.smell_type for o in smells(three)}


def test_rule8_communication():
    decl = "package p;\npublic class N {\n    static native void m(int x);\n"
    nine = decl + "    void go() {\n" + "        m(1);\n" * 9 + "    }\n}\n"
    assert S.EXCESSIVE_INTER_LANG_COMMUNICATION in {o.smell_type for o in smells({"N.java": nine})}
    loop = decl + "    void go(int count) {\n        for (int i = 0; i < count; i++) { m(i); }\n    }\n}\n"
    assert S.EXCESSIVE_INTER_LANG_COMMUNICATION in {o.smell_type for o in smells({"N.java": loop})}
    once = decl + "    void go() {\n        m(1);\n    }\n}\n"
    assert S.EXCESSIVE_INTER_LANG_COMMUNICATION not in {o.smell_type for o in smells({"N.java": once})}


def test_rule9_local_references():
    make = "    jobject o = (*env)->AllocObject(env, cls);\n"
    assert smells({"a.c": fn(make * 16, "jclass cls")}) == []
    assert types(smells({"a.c": fn(make * 17, "jclass cls")})) == ["LocalReferencesAbuse"]
    loop = ("    for (jsize i = 0; i < n; i++) {\n"
            "        jobject o = (*env)->AllocObject(env, cls);\n"
            "        (*env)->DeleteLocalRef(env, o);\n    }")
    assert smells({"a.c": fn(loop, "jclass cls, jsize n")}) == []
    capacity = "    (*env)->EnsureLocalCapacity(env, 32);\n"
    assert smells({"a.c": fn(capacity + make * 17, "jclass cls")}) == []
    # local frames do not always prevent the smell, so they never suppress it
    frame = "    (*env)->PushLocalFrame(env, 32);\n"
    popped = "    (*env)->PopLocalFrame(env, NULL);\n"
    assert types(smells({"a.c": fn(frame + make * 17 + popped, "jclass cls")})) == ["LocalReferencesAbuse"]


def test_rule10_release_pairs():
    with open(os.path.join(LISTINGS, "listing13", "sample_sizes.c"), encoding="utf-8") as f:
        text = f.read()
    assert S.MEMORY_MANAGEMENT_MISMATCH not in {o.smell_type for o in smells({"s.c": text})}
    assert smells({"a.c": fn("    int x = 1;")}) == []


def test_rule11_caching():
    lookup = ('    jclass cls = (*env)->GetObjectClass(env, obj);\n    if (cls == NULL) { return 0; }\n'
              '    jfieldID f = (*env)->GetFieldID(env, cls, "a", "I");\n    if (f == NULL) { return 0; }\n')
    assert smells({"a.c": fn(lookup)}) == []
    in_loop = ('    jclass cls = (*env)->GetObjectClass(env, obj);\n    if (cls == NULL) { return 0; }\n'
               '    for (int i = 0; i < 4; i++) {\n'
               '        jfieldID f = (*env)->GetFieldID(env, cls, "a", "I");\n'
               '        if (f == NULL) { return 0; }\n    }\n')
    assert types(smells({"a.c": fn(in_loop)})) == ["NotCachingObjects"]


def test_rule12_setter_exemption():
    gets = "".join(f"    jint v{i} = (*env)->GetIntField(env, obj, fid);\n" for i in range(3))
    assert types(smells({"a.c": fn(gets, "jobject obj, jfieldID fid")})) == ["ExcessiveObjects"]
    setter = gets + "    (*env)->SetIntField(env, obj, fid, v0);\n"
    assert smells({"a.c": fn(setter, "jobject obj, jfieldID fid")}) == []
    two = "".join(f"    jint v{i} = (*env)->GetIntField(env, obj, fid);\n" for i in range(2))
    assert smells({"a.c": fn(two, "jobject obj, jfieldID fid")}) == []


def test_rules13_14_unused_methods():
    java = "class A {\n    native void f();\n    native void g();\n    void go() { f(); }\n}\n"
    impl = "#include <jni.h>\nvoid Java_A_f(JNIEnv *env, jobject o) {}\n"
    assert [(o.smell_type, o.method_name) for o in smells({"A.java": java, "a.c": impl})] == \
        [(S.UNUSED_METHOD_DECLARATION, "g")]
    impl_both = impl + "void Java_A_g(JNIEnv *env, jobject o) {}\n"
    assert [(o.smell_type, o.method_name) for o in smells({"A.java": java, "a.c": impl_both})] == \
        [(S.UNUSED_METHOD_IMPLEMENTATION, "g")]


def test_rule14_register_natives_suppression():
    java = "package p;\nclass A {\n    native void f();\n    void go() { f(); }\n}\n"
    reg = ('#include <jni.h>\njint JNI_OnLoad(JavaVM *vm, void *r) {\n    JNIEnv *env;\n'
           '    jclass c = (*env)->FindClass(env, "p/A");\n    if (c == NULL) { return -1; }\n'
           '    (*env)->RegisterNatives(env, c, methods, 1);\n    return 0;\n}\n')
    diags = []
    assert smells({"A.java": java, "r.c": reg}, diagnostics=diags) == []
    assert any("RegisterNatives" in d.reason for d in diags)


def test_rule15_comment_does_not_count_as_use():
    java = "class A {\n    native int f(int speed);\n    int go() { return f(1); }\n}\n"
    impl = "#include <jni.h>\njint Java_A_f(JNIEnv *env, jobject o, jint speed) {\n    /* speed */\n    return 0;\n}\n"
    assert [(o.smell_type, o.param_name) for o in smells({"A.java": java, "a.c": impl})] == \
        [(S.UNUSED_PARAMETERS, "speed")]
    used = impl.replace("/* speed */", "return speed;")
    assert smells({"A.java": java, "a.c": used}) == []


# --- configuration ---------------------------------------------------------

def test_config_round_trip_and_errors(tmp_path):
    cfg = DetectionConfig.from_dict({"maxLocalReferences": 4})
    assert cfg.max_local_references == 4
    assert DetectionConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        DetectionConfig.from_dict({"maxLocalRefs": 4})
    with pytest.raises(ConfigError):
        DetectionConfig(max_local_references=0)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    assert load_config(None) == DetectionConfig()


# --- properties ------------------------------------------------------------

@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(random_models)
def test_threshold_monotonicity(model):
    for name, values in COUNTING_THRESHOLDS.items():
        counts = [len(detect_all(model, replace(DetectionConfig(), **{name: v}))) for v in values]
        assert counts == sorted(counts, reverse=True), name


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(random_models)
def test_disjoint_idempotent(model):
    first, second = detect_all(model), detect_all(model)
    assert first == second
    impl = {(o.fqcn_or_symbol, o.method_name) for o in first if o.smell_type is S.UNUSED_METHOD_IMPLEMENTATION}
    decl = {(o.fqcn_or_symbol, o.method_name) for o in first if o.smell_type is S.UNUSED_METHOD_DECLARATION}
    assert not impl & decl


def test_locality_unrelated_file():
    base = {"L.java": loader('System.loadLibrary("foo");'),
            "a.c": fn('    jclass c = (*env)->FindClass(env, "x/Y");\n')}
    with_extra = dict(base, **{"z.c": fn("    int y = 2;", name="other")})
    assert smells(base) == [o for o in smells(with_extra) if o.file_path != "z.c"]


def test_detectors_cover_every_smell():
    assert list(DETECTORS) == list(SmellType)
