"""Per-file syntactic facts for Java and C/C++ sources."""

from ..lexer import Diagnostic, count_loc
from .java import ClassIndex, call_site, native_targets, parse_java, resolve_native_calls
from .native import parse_native
from .types import (
    JavaClassFacts,
    JniApiCall,
    Language,
    LibraryLoad,
    LoadMechanism,
    MethodCall,
    NativeCallSite,
    NativeFunctionFacts,
    NativeMethodDecl,
    PathKind,
    SourceFile,
    language_for,
)

__all__ = [
    "ClassIndex", "Diagnostic", "call_site", "native_targets", "JavaClassFacts", "JniApiCall", "Language",
    "LibraryLoad", "LoadMechanism", "MethodCall", "NativeCallSite",
    "NativeFunctionFacts", "NativeMethodDecl", "PathKind", "SourceFile",
    "count_loc", "language_for", "parse_java", "parse_native",
    "resolve_native_calls",
]
