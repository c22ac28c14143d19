"""Run a candidate solution against test cases, one forked child per test.

Records are JSON lines on stdout:
  {"event": "load-ok" | "load-timeout" | "load-error", ...}
  {"event": "test-result", "index": i, "status": "pass" | "fail" | "error" | "timeout", ...}

The solution's own output goes to the --log file (or /dev/null), never to
stdout. Exit status is 0 whenever the shim itself ran.
"""

import argparse
import json
import math
import os
import resource
import select
import signal
import sys
import time
import traceback


def decode(v):
    if v == "null":
        return None
    (tag, x), = v.items()
    if tag == "int" or tag == "real" or tag == "bool" or tag == "str":
        return x
    if tag == "char":
        return chr(x)
    if tag == "list":
        return [decode(i) for i in x]
    if tag == "map":
        return {decode(k): decode(val) for k, val in x}
    if tag == "set":
        return {decode(i) for i in x}
    raise ValueError("unknown value tag %r" % tag)


def _sort_key(x):
    return (type(x).__name__, x) if isinstance(x, (int, float, str)) else (type(x).__name__, repr(x))


def encode(x):
    if x is None:
        return "null"
    if isinstance(x, bool):
        return {"bool": x}
    if isinstance(x, int):
        if -(2 ** 63) <= x < 2 ** 63:
            return {"int": x}
        return {"str": "<int %d>" % x}
    if isinstance(x, float):
        if math.isfinite(x):
            return {"real": x}
        return {"str": "<real %r>" % x}
    if isinstance(x, str):
        return {"str": x}
    if isinstance(x, (list, tuple)):
        return {"list": [encode(i) for i in x]}
    if isinstance(x, dict):
        return {"map": [[encode(k), encode(v)] for k, v in x.items()]}
    if isinstance(x, (set, frozenset)):
        return {"set": [encode(i) for i in sorted(x, key=_sort_key)]}
    return {"str": "<%s %r>" % (type(x).__name__, x)}


def matches(expected, actual, rel):
    """Mirror of the runner's value comparison on decoded Python values."""
    num = (int, float)
    if isinstance(expected, bool) or isinstance(actual, bool):
        return type(expected) is type(actual) and expected == actual
    if isinstance(expected, num) and isinstance(actual, num):
        if isinstance(expected, int) and isinstance(actual, int):
            return expected == actual
        if expected == actual:
            return True
        if rel is None:
            return False
        return abs(expected - actual) <= rel * max(abs(expected), abs(actual))
    if isinstance(expected, str) and isinstance(actual, str):
        return expected == actual
    if isinstance(expected, list) and isinstance(actual, (list, tuple)):
        return len(expected) == len(actual) and all(
            matches(e, a, rel) for e, a in zip(expected, actual))
    if isinstance(expected, set) and isinstance(actual, (set, frozenset)):
        return len(expected) == len(actual) and all(
            any(matches(e, a, rel) for a in actual) for e in expected)
    if isinstance(expected, dict) and isinstance(actual, dict):
        return len(expected) == len(actual) and all(
            any(matches(k, k2, rel) and matches(v, v2, rel) for k2, v2 in actual.items())
            for k, v in expected.items())
    return expected is None and actual is None


def tolerance(comparison):
    if comparison is None or comparison == "exact":
        return None if comparison == "exact" else 1e-6
    if isinstance(comparison, dict) and "real_tolerance" in comparison:
        return comparison["real_tolerance"]["rel"]
    return 1e-6


def emit(record):
    sys.stdout.write(json.dumps(record, separators=(",", ":")) + "\n")
    sys.stdout.flush()


class Child:
    """A forked child in its own process group with a result pipe."""

    def __init__(self, body, args, log_fd, stdin_fd, memory_mb):
        r, w = os.pipe()
        pid = os.fork()
        if pid == 0:
            os.close(r)
            try:
                os.setpgid(0, 0)
                os.dup2(stdin_fd, 0)
                os.dup2(log_fd, 1)
                os.dup2(log_fd, 2)
                if memory_mb:
                    limit = memory_mb * 1024 * 1024
                    resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
                sys.stdin = os.fdopen(0, "r", closefd=False)
                sys.stdout = os.fdopen(1, "w", closefd=False)
                sys.stderr = os.fdopen(2, "w", closefd=False)
                payload = body(*args)
            except BaseException as e:
                payload = {"status": "error", "kind": type(e).__name__, "message": str(e)}
            try:
                sys.stdout.flush()
                sys.stderr.flush()
            except BaseException:
                pass
            data = json.dumps(payload).encode()
            view = memoryview(data)
            while view:
                n = os.write(w, view)
                view = view[n:]
            os._exit(0)
        os.close(w)
        try:
            os.setpgid(pid, pid)
        except OSError:
            pass
        self.pid = pid
        self.fd = r

    def wait(self, timeout):
        """Returns the decoded payload, or None on timeout."""
        deadline = time.monotonic() + timeout
        chunks = []
        while True:
            left = deadline - time.monotonic()
            if left <= 0:
                self.kill()
                return None
            ready, _, _ = select.select([self.fd], [], [], left)
            if not ready:
                continue
            chunk = os.read(self.fd, 65536)
            if not chunk:
                break
            chunks.append(chunk)
        os.close(self.fd)
        _, status = os.waitpid(self.pid, 0)
        raw = b"".join(chunks)
        if not raw:
            if os.WIFSIGNALED(status):
                sig = os.WTERMSIG(status)
                kind = "MemoryError" if sig == signal.SIGKILL else "Signal"
                return {"status": "error", "kind": kind, "message": "killed by signal %d" % sig}
            return {"status": "error", "kind": "ChildExit", "message": "child exited without a result"}
        return json.loads(raw.decode())

    def kill(self):
        try:
            os.killpg(self.pid, signal.SIGKILL)
        except OSError:
            pass
        try:
            os.close(self.fd)
        except OSError:
            pass
        os.waitpid(self.pid, 0)


def load(path, entry):
    with open(path, encoding="utf-8") as f:
        source = f.read()
    code = compile(source, "solution.py", "exec")
    namespace = {"__name__": "solution", "__builtins__": __builtins__}
    exec(code, namespace)
    fn = namespace.get(entry)
    if not callable(fn):
        raise LookupError("entry function %s is not defined" % entry)
    return fn


def load_only(path, entry):
    load(path, entry)
    return {"status": "ok"}


def run_test(path, entry, case):
    fn = load(path, entry)
    args = [decode(v) for v in case["input"]]
    start = time.monotonic()
    try:
        actual = fn(*args)
    except RecursionError as e:
        return {"status": "error", "kind": "RecursionError", "message": str(e)}
    except BaseException as e:
        tb = traceback.extract_tb(e.__traceback__)
        line = next((fr.lineno for fr in reversed(tb) if fr.filename == "solution.py"), None)
        return {"status": "error", "kind": type(e).__name__, "message": str(e), "line": line}
    elapsed = (time.monotonic() - start) * 1000.0
    expected = decode(case["output"])
    status = "pass" if matches(expected, actual, tolerance(case.get("comparison"))) else "fail"
    return {"status": status, "actual": encode(actual), "elapsed_ms": elapsed}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--solution", required=True)
    p.add_argument("--entry", required=True)
    p.add_argument("--tests", required=True)
    p.add_argument("--timeout", type=float, required=True)
    p.add_argument("--import-timeout", type=float)
    p.add_argument("--memory-mb", type=int, default=0)
    p.add_argument("--log")
    a = p.parse_args(argv)

    try:
        with open(a.tests, encoding="utf-8") as f:
            tests = json.load(f)
        log_fd = os.open(a.log or os.devnull, os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o644)
    except (OSError, ValueError) as e:
        sys.stderr.write("shim: %s\n" % e)
        return 2
    # Children read from a pipe nobody writes: top-level input() blocks
    # until the load timeout instead of failing on end of file.
    stdin_r, stdin_w = os.pipe()

    load_timeout = a.import_timeout if a.import_timeout is not None else a.timeout
    start = time.monotonic()
    result = Child(load_only, (a.solution, a.entry), log_fd, stdin_r, a.memory_mb).wait(load_timeout)
    elapsed = (time.monotonic() - start) * 1000.0
    if result is None:
        emit({"event": "load-timeout", "message": "load exceeded %gs" % load_timeout, "elapsed_ms": elapsed})
        return 0
    if result.get("status") != "ok":
        emit({"event": "load-error", "kind": result.get("kind"), "message": result.get("message"),
              "elapsed_ms": elapsed})
        return 0
    emit({"event": "load-ok", "elapsed_ms": elapsed})

    for index, case in enumerate(tests):
        start = time.monotonic()
        result = Child(run_test, (a.solution, a.entry, case), log_fd, stdin_r, a.memory_mb).wait(a.timeout)
        elapsed = (time.monotonic() - start) * 1000.0
        record = {"event": "test-result", "index": index, "elapsed_ms": elapsed}
        if result is None:
            record.update(status="timeout", message="exceeded %gs" % a.timeout)
        else:
            record.update(result)
            record["elapsed_ms"] = elapsed
        emit(record)
    os.close(stdin_w)
    return 0


if __name__ == "__main__":
    sys.exit(main())
