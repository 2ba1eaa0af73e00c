"""JNI function vocabulary and the per-rule API sets."""

_PRIMS = ("Boolean", "Byte", "Char", "Short", "Int", "Long", "Float", "Double")
_CALL_TYPES = ("Object", "Void") + _PRIMS


def _jni_function_table() -> frozenset[str]:
    names = {
        "GetVersion", "DefineClass", "FindClass", "FromReflectedMethod",
        "FromReflectedField", "ToReflectedMethod", "GetSuperclass",
        "IsAssignableFrom", "ToReflectedField", "Throw", "ThrowNew",
        "ExceptionOccurred", "ExceptionDescribe", "ExceptionClear", "FatalError",
        "PushLocalFrame", "PopLocalFrame", "NewGlobalRef", "DeleteGlobalRef",
        "DeleteLocalRef", "IsSameObject", "NewLocalRef", "EnsureLocalCapacity",
        "AllocObject", "NewObject", "NewObjectV", "NewObjectA", "GetObjectClass",
        "IsInstanceOf", "GetMethodID", "GetFieldID", "GetStaticMethodID",
        "GetStaticFieldID", "NewString", "GetStringLength", "GetStringChars",
        "ReleaseStringChars", "NewStringUTF", "GetStringUTFLength",
        "GetStringUTFChars", "ReleaseStringUTFChars", "GetArrayLength",
        "NewObjectArray", "GetObjectArrayElement", "SetObjectArrayElement",
        "RegisterNatives", "UnregisterNatives", "MonitorEnter", "MonitorExit",
        "GetJavaVM", "GetStringRegion", "GetStringUTFRegion",
        "GetPrimitiveArrayCritical", "ReleasePrimitiveArrayCritical",
        "GetStringCritical", "ReleaseStringCritical", "NewWeakGlobalRef",
        "DeleteWeakGlobalRef", "ExceptionCheck", "NewDirectByteBuffer",
        "GetDirectBufferAddress", "GetDirectBufferCapacity", "GetObjectRefType",
        "GetModule",
    }
    for t in _CALL_TYPES:
        for kind in ("Call", "CallNonvirtual", "CallStatic"):
            for suffix in ("", "V", "A"):
                names.add(f"{kind}{t}Method{suffix}")
    for t in ("Object",) + _PRIMS:
        names.update({f"Get{t}Field", f"Set{t}Field",
                      f"GetStatic{t}Field", f"SetStatic{t}Field"})
    for t in _PRIMS:
        names.update({f"New{t}Array", f"Get{t}ArrayElements",
                      f"Release{t}ArrayElements", f"Get{t}ArrayRegion",
                      f"Set{t}ArrayRegion"})
    return frozenset(names)


JNI_FUNCTIONS = _jni_function_table()

# Rule 1
EXCEPTION_SENSITIVE = frozenset({
    "GetObjectClass", "FindClass", "GetFieldID", "GetStaticFieldID",
    "GetMethodID", "GetStaticMethodID",
})
# Rule 2
RETURN_SENSITIVE = frozenset({
    "FindClass", "GetFieldID", "GetStaticFieldID", "GetMethodID",
    "GetStaticMethodID",
})
EXCEPTION_QUERIES = frozenset({"ExceptionCheck", "ExceptionOccurred"})
THROWERS = frozenset({"Throw", "ThrowNew"})

# Rule 9
LOCAL_REF_CREATORS = frozenset({
    "GetObjectArrayElement", "NewLocalRef", "AllocObject", "NewObject",
    "NewObjectA", "NewObjectV", "NewDirectByteBuffer", "ToReflectedMethod",
    "ToReflectedField",
})

# Rule 10: acquisition -> matching release
ACQUIRE_RELEASE = {
    "GetStringChars": "ReleaseStringChars",
    "GetStringUTFChars": "ReleaseStringUTFChars",
    "GetPrimitiveArrayCritical": "ReleasePrimitiveArrayCritical",
    "GetStringCritical": "ReleaseStringCritical",
}
for _t in _PRIMS:
    ACQUIRE_RELEASE[f"Get{_t}ArrayElements"] = f"Release{_t}ArrayElements"
del _t

# Rule 11
ID_LOOKUPS = frozenset({"GetFieldID", "GetMethodID", "GetStaticMethodID"})

# Rule 12
FIELD_GETTERS = frozenset(
    {f"Get{t}Field" for t in ("Object",) + _PRIMS} | {"GetStaticObjectField"})
FIELD_SETTERS = frozenset(
    {f"Set{t}Field" for t in ("Object",) + _PRIMS} | {"SetStaticObjectField"})

# JNI reference types; a parameter of one of these is an "object parameter".
REFERENCE_TYPES = frozenset(
    {"jobject", "jclass", "jstring", "jthrowable", "jarray", "jobjectArray",
     "jweak"} | {f"j{t.lower()}Array" for t in _PRIMS})
