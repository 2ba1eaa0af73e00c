#include <jni.h>
#include <string.h>

/* well-behaved counterparts of the seeded smells */

static jint checked_flag(JNIEnv *env, jobject o) {
    jclass type = (*env)->GetObjectClass(env, o);
    if (type == NULL) {
        return -1;
    }
    jfieldID fid = (*env)->GetFieldID(env, type, "flag", "I");
    if (fid == NULL) {
        return -1;
    }
    jint flag = (*env)->GetIntField(env, o, fid);
    return flag;
}

static jint released_length(JNIEnv *env, jstring s) {
    const char *text = (*env)->GetStringUTFChars(env, s, NULL);
    if (text == NULL) {
        return -1;
    }
    jint n = (jint) strlen(text);
    (*env)->ReleaseStringUTFChars(env, s, text);
    return n;
}

static jint walk_and_delete(JNIEnv *env, jobjectArray items) {
    jsize n = (*env)->GetArrayLength(env, items);
    jint count = 0;
    for (jsize i = 0; i < n; i++) {
        jobject item = (*env)->GetObjectArrayElement(env, items, i);
        if ((*env)->ExceptionCheck(env)) {
            return -1;
        }
        if (item != NULL) {
            count++;
        }
        (*env)->DeleteLocalRef(env, item);
    }
    return count;
}

static void bump(JNIEnv *env, jobject o) {
    jclass type = (*env)->GetObjectClass(env, o);
    if (type == NULL) {
        return;
    }
    jfieldID fid = (*env)->GetFieldID(env, type, "value", "I");
    if (fid == NULL) {
        return;
    }
    jint a = (*env)->GetIntField(env, o, fid);
    jint b = (*env)->GetIntField(env, o, fid);
    jint c = (*env)->GetIntField(env, o, fid);
    (*env)->SetIntField(env, o, fid, a + b + c);
}
