"""The fifteen JNI design-smell rules evaluated over a :class:`CodebaseModel`."""

from __future__ import annotations

import json
import re
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Callable

from .binding import Binding, CodebaseModel, MatchKind
from .lexer import Diagnostic
from .source_facts import JavaClassFacts, NativeFunctionFacts, PathKind
from .vocab import (
    ACQUIRE_RELEASE,
    EXCEPTION_SENSITIVE,
    FIELD_GETTERS,
    FIELD_SETTERS,
    ID_LOOKUPS,
    RETURN_SENSITIVE,
)


class ConfigError(ValueError):
    pass


_CAMEL = {
    "max_local_references": "maxLocalReferences",
    "max_methods_clustering": "maxMethodsClustering",
    "scatter_min_classes": "scatterMinClasses",
    "scatter_max_methods_per_class": "scatterMaxMethodsPerClass",
    "max_native_calls_same_method": "maxNativeCallsSameMethod",
    "max_native_calls_same_param": "maxNativeCallsSameParam",
    "max_calls_in_loop_bound": "maxCallsInLoopBound",
    "max_id_lookups_per_method": "maxIdLookupsPerMethod",
    "max_field_gets_excessive_objects": "maxFieldGetsExcessiveObjects",
}


@dataclass(frozen=True)
class DetectionConfig:
    max_local_references: int = 16
    max_methods_clustering: int = 8
    scatter_min_classes: int = 3
    scatter_max_methods_per_class: int = 3
    max_native_calls_same_method: int = 8
    max_native_calls_same_param: int = 8
    max_calls_in_loop_bound: int = 8
    max_id_lookups_per_method: int = 2
    max_field_gets_excessive_objects: int = 3

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{_CAMEL[f.name]} must be an integer >= 1, got {value!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "DetectionConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        by_camel = {v: k for k, v in _CAMEL.items()}
        unknown = sorted(set(data) - set(by_camel))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**{by_camel[k]: v for k, v in data.items()})

    def to_dict(self) -> dict[str, int]:
        return {_CAMEL[k]: v for k, v in asdict(self).items()}


def load_config(path: str | None) -> DetectionConfig:
    if path is None:
        return DetectionConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return DetectionConfig.from_dict(data)


class SmellType(str, Enum):
    NOT_HANDLING_EXCEPTIONS = "NotHandlingExceptions"
    ASSUMING_SAFE_RETURN_VALUE = "AssumingSafeReturnValue"
    NOT_SECURING_LIBRARIES = "NotSecuringLibraries"
    HARD_CODING_LIBRARIES = "HardCodingLibraries"
    NOT_USING_RELATIVE_PATH = "NotUsingRelativePath"
    TOO_MUCH_CLUSTERING = "TooMuchClustering"
    TOO_MUCH_SCATTERING = "TooMuchScattering"
    EXCESSIVE_INTER_LANG_COMMUNICATION = "ExcessiveInterLangCommunication"
    LOCAL_REFERENCES_ABUSE = "LocalReferencesAbuse"
    MEMORY_MANAGEMENT_MISMATCH = "MemoryManagementMismatch"
    NOT_CACHING_OBJECTS = "NotCachingObjects"
    EXCESSIVE_OBJECTS = "ExcessiveObjects"
    UNUSED_METHOD_IMPLEMENTATION = "UnusedMethodImplementation"
    UNUSED_METHOD_DECLARATION = "UnusedMethodDeclaration"
    UNUSED_PARAMETERS = "UnusedParameters"

    @property
    def order(self) -> int:
        return _ORDER[self]


_ORDER = {t: i for i, t in enumerate(SmellType)}


@dataclass(frozen=True)
class SmellOccurrence:
    smell_type: SmellType
    file_path: str
    fqcn_or_symbol: str
    method_name: str | None = None
    param_name: str | None = None
    line: int | None = None
    evidence: str = ""
    release_id: str = ""

    def sort_key(self) -> tuple[str, int, int]:
        return self.file_path, self.line or 0, self.smell_type.order


def _native_occ(model: CodebaseModel, smell: SmellType, f: NativeFunctionFacts, line: int | None,
                evidence: str, method: str | None = None, param: str | None = None) -> SmellOccurrence:
    return SmellOccurrence(smell, f.file.path, f.symbol_name, method, param, line, evidence, model.release_id)


def _class_occ(model: CodebaseModel, smell: SmellType, cls: JavaClassFacts, line: int | None,
               evidence: str, method: str | None = None) -> SmellOccurrence:
    return SmellOccurrence(smell, cls.file.path, cls.fqcn, method, None, line, evidence, model.release_id)


# Rule 1
def detect_not_handling_exceptions(model: CodebaseModel, config: DetectionConfig,
                                   diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for f in model.native_functions:
        for call in f.jni_api_calls:
            if call.api_name not in EXCEPTION_SENSITIVE:
                continue
            if not call.null_or_error_checked:
                why = "is not checked for errors"
            elif not call.followed_by_throw_and_return:
                why = "is checked but the error path does not return"
            else:
                continue
            out.append(_native_occ(model, SmellType.NOT_HANDLING_EXCEPTIONS, f, call.line,
                                   f"{call.api_name} result {why}"))
    return out


# Rule 2
def detect_assuming_safe_return_value(model: CodebaseModel, config: DetectionConfig,
                                      diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for f in model.native_functions:
        for call in f.jni_api_calls:
            if call.api_name not in RETURN_SENSITIVE or call.null_or_error_checked or not call.assigned_to:
                continue
            name = call.assigned_to
            if name in f.returned_identifiers:
                how = "is returned"
            elif name in f.escaping_identifiers:
                how = "is stored into non-local state"
            else:
                continue
            out.append(_native_occ(model, SmellType.ASSUMING_SAFE_RETURN_VALUE, f, call.line,
                                   f"unchecked {call.api_name} result '{name}' {how}"))
    return out


# Rule 3
def detect_not_securing_libraries(model: CodebaseModel, config: DetectionConfig,
                                  diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for cls in model.java_classes:
        for load in cls.library_loads:
            if not load.inside_privileged_block:
                what = f'"{load.argument}"' if load.argument is not None else "a dynamic path"
                out.append(_class_occ(model, SmellType.NOT_SECURING_LIBRARIES, cls, load.line,
                                      f"library {what} is loaded outside a privileged block"))
    return out


# Rule 4
def detect_hard_coding_libraries(model: CodebaseModel, config: DetectionConfig,
                                 diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for cls in model.java_classes:
        hard = [ld for ld in cls.library_loads
                if ld.argument is not None and ld.inside_link_error_try_catch and not ld.inside_os_conditional]
        if len(hard) >= 2:
            names = ", ".join(ld.argument for ld in hard)
            out.append(_class_occ(model, SmellType.HARD_CODING_LIBRARIES, cls, hard[0].line,
                                  f"{len(hard)} hard-coded library loads guarded only by "
                                  f"UnsatisfiedLinkError handlers ({names})"))
    return out


# Rule 5
def detect_not_using_relative_path(model: CodebaseModel, config: DetectionConfig,
                                   diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for cls in model.java_classes:
        for load in cls.library_loads:
            if load.path_kind is PathKind.ABSOLUTE:
                out.append(_class_occ(model, SmellType.NOT_USING_RELATIVE_PATH, cls, load.line,
                                      f'library loaded from absolute path "{load.argument}"'))
            elif load.path_kind is PathKind.DYNAMIC and diagnostics is not None:
                diagnostics.append(Diagnostic(cls.file.path, load.line,
                                              "library path is computed at run time; absolute-path check skipped"))
    return out


# Rule 6
def detect_too_much_clustering(model: CodebaseModel, config: DetectionConfig,
                               diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for cls in model.java_classes:
        n = len(cls.native_decls)
        if n < config.max_methods_clustering:
            continue
        external = any(site.caller_fqcn != cls.fqcn
                       for d in cls.native_decls for site in model.call_index.get(d, ()))
        if external:
            out.append(_class_occ(model, SmellType.TOO_MUCH_CLUSTERING, cls, cls.line,
                                  f"class declares {n} native methods and is used from other classes"))
    return out


# Rule 7
def detect_too_much_scattering(model: CodebaseModel, config: DetectionConfig,
                               diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    by_package: dict[str, list[JavaClassFacts]] = defaultdict(list)
    for cls in model.java_classes:
        if cls.native_decls:
            by_package[cls.package].append(cls)
    out = []
    for package in sorted(by_package):
        members = by_package[package]
        if len(members) < config.scatter_min_classes:
            continue
        if any(len(c.native_decls) > config.scatter_max_methods_per_class for c in members):
            continue
        label = package or "(default package)"
        for cls in members:
            out.append(_class_occ(model, SmellType.TOO_MUCH_SCATTERING, cls, cls.line,
                                  f"package {label} spreads native code over {len(members)} classes "
                                  f"with at most {config.scatter_max_methods_per_class} native methods each"))
    return out


_PURE_IDENT = re.compile(r"^[A-Za-z_$][\w$]*$")


# Rule 8
def detect_excessive_interlang_communication(model: CodebaseModel, config: DetectionConfig,
                                             diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for cls in model.java_classes:
        sites = cls.native_call_sites
        if not sites:
            continue
        reason = None
        per_target = Counter((s.target_owner, s.target_name) for s in sites)
        for (owner, name), count in sorted(per_target.items(), key=lambda kv: (kv[0][0] or "", kv[0][1])):
            if count > config.max_native_calls_same_method:
                line = min(s.line for s in sites if (s.target_owner, s.target_name) == (owner, name))
                reason = (line, name, f"native method {name} is called {count} times")
                break
        if reason is None:
            per_arg: Counter[str] = Counter()
            for s in sites:
                for a in set(a for a in s.args if _PURE_IDENT.match(a) and a not in ("null", "true", "false")):
                    per_arg[a] += 1
            for arg, count in sorted(per_arg.items()):
                if count > config.max_native_calls_same_param:
                    line = min(s.line for s in sites if arg in s.args)
                    reason = (line, None, f"{count} native calls share the argument '{arg}'")
                    break
        if reason is None:
            for s in sites:
                if s.loop_depth >= 1 and (s.loop_bound is None or s.loop_bound > config.max_calls_in_loop_bound):
                    bound = "an unbounded loop" if s.loop_bound is None else f"a loop of {s.loop_bound} iterations"
                    reason = (s.line, s.target_name, f"native method {s.target_name} is called inside {bound}")
                    break
        if reason is not None:
            line, method, text = reason
            out.append(_class_occ(model, SmellType.EXCESSIVE_INTER_LANG_COMMUNICATION, cls, line, text, method))
    return out


# Rule 9
def detect_local_references_abuse(model: CodebaseModel, config: DetectionConfig,
                                  diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for f in model.native_functions:
        weighted = f.weighted_local_refs(config.max_local_references)
        if weighted > config.max_local_references and not f.has_delete_local_ref \
                and not f.has_ensure_local_capacity:
            out.append(_native_occ(model, SmellType.LOCAL_REFERENCES_ABUSE, f, f.line,
                                   f"about {weighted} local references created without DeleteLocalRef "
                                   f"or EnsureLocalCapacity"))
    return out


# Rule 10
def detect_memory_management_mismatch(model: CodebaseModel, config: DetectionConfig,
                                      diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for f in model.native_functions:
        for call in f.jni_api_calls:
            if call.api_name in ACQUIRE_RELEASE and call.released_by is None:
                out.append(_native_occ(model, SmellType.MEMORY_MANAGEMENT_MISMATCH, f, call.line,
                                       f"{call.api_name} is never paired with {ACQUIRE_RELEASE[call.api_name]}"))
    return out


def _java_calls_to(model: CodebaseModel, f: NativeFunctionFacts) -> int:
    return sum(len(model.call_index.get(b.decl, ())) for b in model.bindings
               if any(impl is f for impl in b.impls))


# Rule 11
def detect_not_caching_objects(model: CodebaseModel, config: DetectionConfig,
                               diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for f in model.native_functions:
        if not f.object_params:
            continue
        lookups = [c for c in f.jni_api_calls if c.api_name in ID_LOOKUPS]
        if not lookups:
            continue
        if len(lookups) > config.max_id_lookups_per_method:
            text = f"{len(lookups)} field/method ID lookups on every call"
        elif any(c.loop_depth >= 1 for c in lookups):
            text = "field/method ID lookup inside a loop"
        elif _java_calls_to(model, f) > config.max_native_calls_same_method:
            text = "ID lookups repeated by a frequently called native method"
        else:
            continue
        out.append(_native_occ(model, SmellType.NOT_CACHING_OBJECTS, f, lookups[0].line, text))
    return out


# Rule 12
def detect_excessive_objects(model: CodebaseModel, config: DetectionConfig,
                             diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for f in model.native_functions:
        if not f.object_params:
            continue
        gets = sum(1 for c in f.jni_api_calls if c.api_name in FIELD_GETTERS)
        sets = sum(1 for c in f.jni_api_calls if c.api_name in FIELD_SETTERS)
        if gets >= config.max_field_gets_excessive_objects and sets == 0:
            out.append(_native_occ(model, SmellType.EXCESSIVE_OBJECTS, f, f.line,
                                   f"object parameter read through {gets} field getters and never written"))
    return out


def _decl_class(model: CodebaseModel) -> dict[int, JavaClassFacts]:
    return {id(d): c for c in model.java_classes for d in c.native_decls}


# Rule 13
def detect_unused_method_implementation(model: CodebaseModel, config: DetectionConfig,
                                        diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    owners = _decl_class(model)
    out = []
    for b in model.bindings:
        if b.match_kind is MatchKind.UNMATCHED or model.call_index.get(b.decl):
            continue
        cls = owners[id(b.decl)]
        out.append(_class_occ(model, SmellType.UNUSED_METHOD_IMPLEMENTATION, cls, b.decl.line,
                              f"native method {b.decl.name} is implemented as {b.impl.symbol_name} "
                              f"but never called from Java", b.decl.name))
    return out


# Rule 14
def detect_unused_method_declaration(model: CodebaseModel, config: DetectionConfig,
                                     diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    owners = _decl_class(model)
    registered = model.registered_classes()
    out = []
    for b in model.bindings:
        if b.match_kind is not MatchKind.UNMATCHED:
            continue
        cls = owners[id(b.decl)]
        if cls.fqcn in registered:
            if diagnostics is not None:
                diagnostics.append(Diagnostic(cls.file.path, b.decl.line,
                                              f"{cls.fqcn}.{b.decl.name} has no Java_ symbol; "
                                              f"class is registered with RegisterNatives"))
            continue
        out.append(_class_occ(model, SmellType.UNUSED_METHOD_DECLARATION, cls, b.decl.line,
                              f"native method {b.decl.name} has no native implementation", b.decl.name))
    return out


# Rule 15
def detect_unused_parameters(model: CodebaseModel, config: DetectionConfig,
                             diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    out = []
    for b in model.bindings:
        if b.match_kind is not MatchKind.EXACT or b.impl is None:
            continue
        f = b.impl
        impl_params = f.params[2:] if len(f.params) >= 2 else ()
        for _, name in impl_params[:len(b.decl.params)]:
            if name and f.body_identifier_uses.get(name, 0) == 0:
                out.append(_native_occ(model, SmellType.UNUSED_PARAMETERS, f, f.line,
                                       f"parameter '{name}' of {b.decl.name} is never used",
                                       method=b.decl.name, param=name))
    return out


DETECTORS: dict[SmellType, Callable[..., list[SmellOccurrence]]] = {
    SmellType.NOT_HANDLING_EXCEPTIONS: detect_not_handling_exceptions,
    SmellType.ASSUMING_SAFE_RETURN_VALUE: detect_assuming_safe_return_value,
    SmellType.NOT_SECURING_LIBRARIES: detect_not_securing_libraries,
    SmellType.HARD_CODING_LIBRARIES: detect_hard_coding_libraries,
    SmellType.NOT_USING_RELATIVE_PATH: detect_not_using_relative_path,
    SmellType.TOO_MUCH_CLUSTERING: detect_too_much_clustering,
    SmellType.TOO_MUCH_SCATTERING: detect_too_much_scattering,
    SmellType.EXCESSIVE_INTER_LANG_COMMUNICATION: detect_excessive_interlang_communication,
    SmellType.LOCAL_REFERENCES_ABUSE: detect_local_references_abuse,
    SmellType.MEMORY_MANAGEMENT_MISMATCH: detect_memory_management_mismatch,
    SmellType.NOT_CACHING_OBJECTS: detect_not_caching_objects,
    SmellType.EXCESSIVE_OBJECTS: detect_excessive_objects,
    SmellType.UNUSED_METHOD_IMPLEMENTATION: detect_unused_method_implementation,
    SmellType.UNUSED_METHOD_DECLARATION: detect_unused_method_declaration,
    SmellType.UNUSED_PARAMETERS: detect_unused_parameters,
}


def detect_all(model: CodebaseModel, config: DetectionConfig | None = None,
               diagnostics: list[Diagnostic] | None = None) -> list[SmellOccurrence]:
    """Run every detector in enum order; results sorted by (file, line, smell type)."""
    config = config or DetectionConfig()
    found: list[SmellOccurrence] = []
    for smell in SmellType:
        found.extend(DETECTORS[smell](model, config, diagnostics))
    return sorted(found, key=SmellOccurrence.sort_key)


def bindings_for(model: CodebaseModel, f: NativeFunctionFacts) -> list[Binding]:
    return [b for b in model.bindings if any(impl is f for impl in b.impls)]
