"""Terms shared by the differential and algebra tests."""

from pathlib import Path

TERMS_DIR = Path(__file__).resolve().parent.parent / "terms"

CORPUS = {
    "skip": "|- skip : com",
    "m1": "f : com -> com, abort : com, x : expint, y : expint |- f (if x != y then abort) : com",
    "m2": "N : expint, abort : com |- new_int x := 0 in while !x < N do x := !x + 1; "
          "if !x > 0 then abort : com",
    "seq": "c : com, d : com |- c; d : com",
    "if": "b : expbool, c : com, d : com |- if b then c else d : com",
    "while": "b : expbool, c : com |- while b do c : com",
    "assign": "v : varint, e : expint |- v := e : com",
    "deref_sum": "v : varint, w : varint |- !v + !w : expint",
    "local": "abort : com |- new_int x := 0 in x := 1; if !x = 1 then abort : com",
    "local_array": "e : expint, abort : com |- new_int a[2] := 0 in a[e] := 1; "
                   "if !a[0] = 1 then abort : com",
    "fun_exp": "f : expint -> expint, x : expint |- f (x + 1) : expint",
    "ident": "x : expint |- x : expint",
    "var_ident": "v : varint |- v : varint",
    "counter": "f : com -> com, abort : com |- new_int c := 0 in f (c := !c + 1); "
               "if !c > 1 then abort : com",
    "bool_local": "b : expbool, abort : com |- new_bool t := false in t := not b; "
                  "if !t then abort : com",
    "var_arg": "g : varint -> com, abort : com |- new_int x := 0 in g x; "
               "if !x = 1 then abort : com",
    "ctx_array": "a[2] : varint, e : expint |- a[e] := !a[1] : com",
    "sym_length": "a[k] : varint, e : expint, abort : com |- a[e] := k; "
                  "if !a[0] > 0 then abort : com",
}

# terms whose array accesses may go out of bounds; checked with bounds checking on too
BOUNDS = ("local_array", "sym_length")
