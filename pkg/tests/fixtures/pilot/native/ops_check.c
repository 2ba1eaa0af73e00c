#include <jni.h>

JNIEXPORT jint JNICALL Java_pilot_nat_Ops_check(JNIEnv *env, jclass cls, jobject o) {
    jclass type = (*env)->GetObjectClass(env, o);
    if (type == NULL) {
        return -1;
    }
    jfieldID fid = (*env)->GetFieldID(env, type, "flag", "I");
    jint flag = (*env)->GetIntField(env, o, fid);
    return flag;
}
