from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum


class Language(str, Enum):
    JAVA = "Java"
    C = "C"
    CPP = "Cpp"
    OTHER = "Other"


_EXTENSIONS = {
    ".java": Language.JAVA,
    ".c": Language.C,
    ".h": Language.C,
    ".cc": Language.CPP,
    ".cpp": Language.CPP,
    ".cxx": Language.CPP,
    ".hpp": Language.CPP,
}


def language_for(path: str) -> Language:
    return _EXTENSIONS.get(os.path.splitext(path)[1].lower(), Language.OTHER)


@dataclass(frozen=True)
class SourceFile:
    path: str
    language: Language
    loc: int = 0
    release_id: str = ""


@dataclass(frozen=True)
class NativeMethodDecl:
    owner: str
    name: str
    params: tuple[tuple[str, str], ...]
    is_static: bool
    line: int


@dataclass(frozen=True)
class MethodCall:
    """Any Java method invocation, kept for cross-file resolution.

    ``qualifier`` is None for an unqualified call, otherwise the receiver
    text such as ``"this"``, ``"Api"``, ``"new HelloWorld()"`` or
    ``"Runtime.getRuntime()"``.
    """

    caller_fqcn: str
    qualifier: str | None
    name: str
    line: int
    loop_depth: int
    loop_bound: int | None
    args: tuple[str, ...]


@dataclass(frozen=True)
class NativeCallSite:
    caller_fqcn: str
    target_owner: str | None
    target_name: str
    line: int
    loop_depth: int
    loop_bound: int | None
    args: tuple[str, ...]


class LoadMechanism(str, Enum):
    LOAD_LIBRARY = "LoadLibrary"
    LOAD = "Load"


class PathKind(str, Enum):
    NAME_ONLY = "NameOnly"
    RELATIVE = "Relative"
    ABSOLUTE = "Absolute"
    DYNAMIC = "Dynamic"


@dataclass(frozen=True)
class LibraryLoad:
    mechanism: LoadMechanism
    argument: str | None  # None when the argument is not a single string literal
    path_kind: PathKind
    inside_privileged_block: bool
    inside_link_error_try_catch: bool
    inside_os_conditional: bool
    line: int


@dataclass(frozen=True)
class JavaClassFacts:
    fqcn: str
    package: str
    file: SourceFile
    line: int = 0
    native_decls: tuple[NativeMethodDecl, ...] = ()
    library_loads: tuple[LibraryLoad, ...] = ()
    native_call_sites: tuple[NativeCallSite, ...] = ()
    calls: tuple[MethodCall, ...] = ()
    imports: tuple[str, ...] = ()

    @property
    def simple_name(self) -> str:
        return self.fqcn.rsplit(".", 1)[-1].rsplit("$", 1)[-1]


@dataclass(frozen=True)
class JniApiCall:
    api_name: str
    assigned_to: str | None
    line: int
    loop_depth: int
    null_or_error_checked: bool
    followed_by_throw_and_return: bool
    released_by: int | None = None
    loop_bound: int | None = None
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class NativeFunctionFacts:
    symbol_name: str
    file: SourceFile
    params: tuple[tuple[str, str], ...]
    line: int = 0
    jni_api_calls: tuple[JniApiCall, ...] = ()
    body_identifier_uses: Counter = field(default_factory=Counter, hash=False)
    returned_identifiers: frozenset[str] = frozenset()
    # identifiers stored into non-local state (globals, statics) or assigned from such stores
    escaping_identifiers: frozenset[str] = frozenset()
    local_ref_creation_count: int = 0
    has_delete_local_ref: bool = False
    has_ensure_local_capacity: bool = False
    registered_classes: tuple[str, ...] = ()
    registers_natives: bool = False

    @property
    def follows_jni_convention(self) -> bool:
        return bool(self.params) and "JNIEnv" in self.params[0][0]

    @property
    def object_params(self) -> tuple[str, ...]:
        """Reference-typed parameters, excluding the two leading JNI arguments."""
        from ..vocab import REFERENCE_TYPES

        rest = self.params[2:] if self.follows_jni_convention else self.params
        return tuple(name for typ, name in rest if typ.split()[-1:] and typ.split()[-1] in REFERENCE_TYPES)

    def weighted_local_refs(self, threshold: int) -> int:
        """Loop-weighted count of local-reference creations.

        A creation inside loops with a static bound B counts B times; inside a
        loop of unknown bound it counts ``threshold + 1``.
        """
        from ..vocab import LOCAL_REF_CREATORS

        total = 0
        for call in self.jni_api_calls:
            if call.api_name not in LOCAL_REF_CREATORS:
                continue
            if call.loop_depth == 0:
                total += 1
            elif call.loop_bound is None:
                total += threshold + 1
            else:
                total += max(call.loop_bound, 1)
        return total
