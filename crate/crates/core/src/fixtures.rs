//! Bundled problems: hand-built programs covering every construct plus a
//! fixed set of generated ones.

use crate::problem::{derive_tests, Problem};
use crate::uast::build::*;
use crate::uast::gen::{gen_problem, Construct, SizeProfile, FIXTURE_STEP_LIMIT};
use crate::uast::{Limits, Program, TypeTag, Value};

fn ints(xs: &[i64]) -> Value {
    Value::List(xs.iter().map(|x| Value::Int(*x)).collect())
}

fn grid(rows: &[&str]) -> Value {
    Value::List(
        rows.iter()
            .map(|r| Value::List(r.chars().map(|c| Value::Char(c as u32)).collect()))
            .collect(),
    )
}

fn problem(id: &str, program: Program, inputs: Vec<Vec<Value>>) -> Problem {
    let tests = derive_tests(&program, &inputs, Limits::steps(FIXTURE_STEP_LIMIT))
        .into_iter()
        .map(|t| t.unwrap_or_else(|e| panic!("fixture {id}: {e}")))
        .collect();
    Problem {
        id: id.to_string(),
        program,
        tests,
    }
}

fn main_fn(params: Vec<crate::uast::Binding>, ret_ty: TypeTag, locals: Vec<crate::uast::Binding>, body: crate::uast::Block) -> crate::uast::FuncDef {
    func("__main__", params, ret_ty, locals, body)
}

/// Two trains leave with periods `var0` and `var1`; which destination is
/// reached more often.
pub fn trains() -> Program {
    let i = TypeTag::Int;
    let main = main_fn(
        vec![b("var0", i.clone()), b("var1", i.clone())],
        TypeTag::String,
        vec![b("var2", i.clone()), b("var3", i.clone()), b("var4", i.clone())],
        vec![
            assign(
                var("var2"),
                mul(div(var("var0"), call("func0", vec![var("var0"), var("var1")])), var("var1")),
            ),
            assign(var("var3"), div(var("var2"), var("var0"))),
            assign(var("var4"), div(var("var2"), var("var1"))),
            if_else(
                gt(var("var0"), var("var1")),
                vec![assign(var("var3"), add(var("var3"), int(1)))],
                vec![assign(var("var4"), add(var("var4"), int(1)))],
            ),
            if_else(
                gt(var("var3"), var("var4")),
                vec![ret(string("Dasha"))],
                vec![if_else(
                    lt(var("var3"), var("var4")),
                    vec![ret(string("Masha"))],
                    vec![ret(string("Equal"))],
                )],
            ),
        ],
    );
    let low = call("min", vec![var("var0"), var("var1")]);
    let high = call("max", vec![var("var0"), var("var1")]);
    let gcd = func(
        "func0",
        vec![b("var0", i.clone()), b("var1", i.clone())],
        i,
        vec![],
        vec![ret(ternary(
            eq(var("var0"), var("var1")),
            var("var0"),
            call("func0", vec![low.clone(), sub(high, low)]),
        ))],
    );
    Program::new(vec![], vec![main, gcd], "__main__")
}

/// Minimum number of prefix-rectangle updates to realise a W/B feature.
pub fn haar_feature() -> Program {
    let i = TypeTag::Int;
    let cell = |g: &str, r: &str, c: &str| idx(idx(var(g), var(r)), var(c));
    let locals = vec![
        b("var2", i.clone()),
        b("var3", i.clone()),
        b("var4", i.clone()),
        b("var5", TypeTag::list(TypeTag::list(TypeTag::Int))),
        b("var6", i.clone()),
        b("var7", i.clone()),
        b("var8", i.clone()),
        b("var9", i.clone()),
        b("var10", i.clone()),
        b("var11", i.clone()),
        b("var12", i.clone()),
    ];
    let innermost = while_inc(
        le(var("var12"), var("var8")),
        "var12",
        vec![assign(
            cell("var5", "var11", "var12"),
            add(cell("var5", "var11", "var12"), var("var10")),
        )],
    );
    let inner = while_dec(
        ge(var("var8"), int(0)),
        "var8",
        vec![
            assign(
                var("var9"),
                ternary(eq(cell("var1", "var7", "var8"), int(87)), int(1), sub(int(0), int(1))),
            ),
            assign(var("var10"), sub(var("var9"), cell("var5", "var7", "var8"))),
            if_(eq(var("var10"), int(0)), vec![cont()]),
            assign(var("var6"), add(var("var6"), int(1))),
            assign(var("var11"), int(0)),
            while_inc(
                le(var("var11"), var("var7")),
                "var11",
                vec![assign(var("var12"), int(0)), innermost],
            ),
        ],
    );
    let main = main_fn(
        vec![b("var0", i.clone()), b("var1", TypeTag::list(TypeTag::list(TypeTag::Char)))],
        i,
        locals,
        vec![
            assign(var("var2"), len(var("var1"))),
            assign(var("var3"), var("var0")),
            assign(var("var4"), int(0)),
            while_(lt(var("var4"), var("var2")), vec![assign(var("var4"), add(var("var4"), int(1)))]),
            assign(var("var5"), new_container(vec![var("var2"), var("var3")])),
            assign(var("var6"), int(0)),
            assign(var("var7"), sub(var("var2"), int(1))),
            while_dec(
                ge(var("var7"), int(0)),
                "var7",
                vec![assign(var("var8"), sub(var("var3"), int(1))), inner],
            ),
            ret(var("var6")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Weighted digit sum of a string, skipping `=` signs, through a char
/// helper that maps digit characters to small code points.
pub fn digit_weights() -> Program {
    let c = TypeTag::Char;
    let helper = func(
        "func0",
        vec![b("var0", c.clone())],
        c,
        vec![],
        vec![ret(ternary(
            and(ge(var("var0"), int(48)), le(var("var0"), int(57))),
            add(var("var0"), int(-48)),
            var("var0"),
        ))],
    );
    let i = TypeTag::Int;
    let main = main_fn(
        vec![b("var1", TypeTag::String)],
        i.clone(),
        vec![b("var2", i.clone()), b("var3", i.clone()), b("var5", i.clone()), b("var6", i)],
        vec![
            assign(var("var2"), len(var("var1"))),
            assign(var("var3"), int(0)),
            assign(var("var5"), var("var2")),
            assign(var("var6"), int(0)),
            while_inc(
                lt(var("var6"), var("var2")),
                "var6",
                vec![
                    if_(
                        neq(idx(var("var1"), var("var6")), int(61)),
                        vec![assign(
                            var("var3"),
                            add(
                                var("var3"),
                                mul(call("func0", vec![idx(var("var1"), var("var6"))]), var("var5")),
                            ),
                        )],
                    ),
                    assign(var("var5"), sub(var("var5"), int(1))),
                ],
            ),
            ret(var("var3")),
        ],
    );
    Program::new(vec![], vec![helper, main], "__main__")
}

/// Running maximum with a sentinel pushed onto an empty list.
pub fn sentinel_max() -> Program {
    let i = TypeTag::Int;
    let li = TypeTag::list(TypeTag::Int);
    let main = main_fn(
        vec![b("var0", li.clone())],
        li.clone(),
        vec![b("var6", li), b("var7", i.clone()), b("var8", i)],
        vec![
            assign(var("var6"), new_container(vec![])),
            expr_stmt(call("array_push", vec![var("var6"), int(-1)])),
            assign(var("var7"), int(0)),
            while_inc(
                lt(var("var7"), len(var("var0"))),
                "var7",
                vec![
                    assign(var("var8"), idx(var("var6"), sub(len(var("var6")), int(1)))),
                    if_else(
                        gt(idx(var("var0"), var("var7")), var("var8")),
                        vec![expr_stmt(call("array_push", vec![var("var6"), idx(var("var0"), var("var7"))]))],
                        vec![expr_stmt(call("array_push", vec![var("var6"), var("var8")]))],
                    ),
                ],
            ),
            ret(var("var6")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Counts words longer than `var1` characters.
pub fn long_words() -> Program {
    let i = TypeTag::Int;
    let main = main_fn(
        vec![b("var0", TypeTag::String), b("var1", i.clone())],
        i.clone(),
        vec![b("var2", TypeTag::list(TypeTag::String)), b("var3", i), b("var4", TypeTag::String)],
        vec![
            assign(var("var2"), call("string_split", vec![var("var0")])),
            assign(var("var3"), int(0)),
            for_each(
                "var4",
                var("var2"),
                vec![if_(gt(len(var("var4")), var("var1")), vec![assign(var("var3"), add(var("var3"), int(1)))])],
            ),
            ret(var("var3")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// A helper bumps a module-level counter on every call.
pub fn call_counter() -> Program {
    let i = TypeTag::Int;
    let helper = func(
        "func0",
        vec![b("var1", i.clone())],
        i.clone(),
        vec![],
        vec![
            assign(var("var0"), add(var("var0"), int(1))),
            ret(mul(var("var1"), var("var0"))),
        ],
    );
    let main = main_fn(
        vec![b("var2", i.clone())],
        i.clone(),
        vec![b("var3", i.clone()), b("var4", i)],
        vec![
            assign(var("var3"), int(0)),
            assign(var("var4"), int(0)),
            while_inc(
                lt(var("var4"), var("var2")),
                "var4",
                vec![assign(var("var3"), add(var("var3"), call("func0", vec![var("var4")])))],
            ),
            ret(add(var("var3"), var("var0"))),
        ],
    );
    Program::new(
        vec![crate::uast::GlobalDecl::new("var0", TypeTag::Int, Some(crate::uast::Literal::Int(0)))],
        vec![main, helper],
        "__main__",
    )
}

/// Highest character frequency, tracking seen characters in a set.
pub fn char_frequency() -> Program {
    let i = TypeTag::Int;
    let c = TypeTag::Char;
    let main = main_fn(
        vec![b("var0", TypeTag::String)],
        i.clone(),
        vec![
            b("var1", TypeTag::map(c.clone(), i.clone())),
            b("var2", TypeTag::set(c.clone())),
            b("var3", c.clone()),
            b("var4", i.clone()),
            b("var5", c),
        ],
        vec![
            assign(var("var1"), new_container(vec![])),
            assign(var("var2"), new_container(vec![])),
            for_each(
                "var3",
                var("var0"),
                vec![if_else(
                    call("set_contains", vec![var("var2"), var("var3")]),
                    vec![expr_stmt(call(
                        "map_put",
                        vec![var("var1"), var("var3"), add(call("map_get", vec![var("var1"), var("var3")]), int(1))],
                    ))],
                    vec![
                        expr_stmt(call("set_add", vec![var("var2"), var("var3")])),
                        expr_stmt(call("map_put", vec![var("var1"), var("var3"), int(1)])),
                    ],
                )],
            ),
            assign(var("var4"), int(0)),
            for_each(
                "var5",
                var("var1"),
                vec![assign(
                    var("var4"),
                    call("max", vec![var("var4"), call("map_get", vec![var("var1"), var("var5")])]),
                )],
            ),
            ret(var("var4")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Mean of a list as a real, 0 for an empty list.
pub fn mean_value() -> Program {
    let i = TypeTag::Int;
    let main = main_fn(
        vec![b("var0", TypeTag::list(i.clone()))],
        TypeTag::Real,
        vec![b("var1", TypeTag::Real), b("var2", i)],
        vec![
            assign(var("var1"), real(0.0)),
            for_each("var2", var("var0"), vec![assign(var("var1"), add(var("var1"), var("var2")))]),
            if_(eq(len(var("var0")), int(0)), vec![ret(real(0.0))]),
            ret(div(var("var1"), len(var("var0")))),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Quotient and remainder under truncating division.
pub fn quot_rem() -> Program {
    let i = TypeTag::Int;
    let li = TypeTag::list(i.clone());
    let main = main_fn(
        vec![b("var0", i.clone()), b("var1", i)],
        li.clone(),
        vec![b("var2", li)],
        vec![
            assign(var("var2"), new_container(vec![])),
            expr_stmt(call("array_push", vec![var("var2"), div(var("var0"), var("var1"))])),
            expr_stmt(call("array_push", vec![var("var2"), rem(var("var0"), var("var1"))])),
            ret(var("var2")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Reverses a string one character at a time.
pub fn reverse_string() -> Program {
    let i = TypeTag::Int;
    let s = TypeTag::String;
    let main = main_fn(
        vec![b("var0", s.clone())],
        s.clone(),
        vec![b("var1", s), b("var2", i)],
        vec![
            assign(var("var1"), string("")),
            assign(var("var2"), sub(len(var("var0")), int(1))),
            while_dec(
                ge(var("var2"), int(0)),
                "var2",
                vec![assign(
                    var("var1"),
                    call(
                        "concat_string",
                        vec![var("var1"), call("substring", vec![var("var0"), var("var2"), add(var("var2"), int(1))])],
                    ),
                )],
            ),
            ret(var("var1")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Euclid's algorithm with an unannotated loop.
pub fn euclid() -> Program {
    let i = TypeTag::Int;
    let main = main_fn(
        vec![b("var0", i.clone()), b("var1", i.clone())],
        i.clone(),
        vec![b("var2", i)],
        vec![
            assign(var("var0"), call("abs", vec![var("var0")])),
            assign(var("var1"), call("abs", vec![var("var1")])),
            while_(
                neq(var("var1"), int(0)),
                vec![
                    assign(var("var2"), rem(var("var0"), var("var1"))),
                    assign(var("var0"), var("var1")),
                    assign(var("var1"), var("var2")),
                ],
            ),
            ret(var("var0")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// First index of `var1` in the list, or -1.
pub fn find_index() -> Program {
    let i = TypeTag::Int;
    let main = main_fn(
        vec![b("var0", TypeTag::list(i.clone())), b("var1", i.clone())],
        i.clone(),
        vec![b("var2", i.clone()), b("var3", i)],
        vec![
            assign(var("var2"), int(-1)),
            assign(var("var3"), int(0)),
            while_inc(
                lt(var("var3"), len(var("var0"))),
                "var3",
                vec![if_(
                    eq(idx(var("var0"), var("var3")), var("var1")),
                    vec![assign(var("var2"), var("var3")), brk()],
                )],
            ),
            ret(var("var2")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Describes an integer by sign and parity.
pub fn classify_number() -> Program {
    let main = main_fn(
        vec![b("var0", TypeTag::Int)],
        TypeTag::String,
        vec![],
        vec![if_else(
            lt(var("var0"), int(0)),
            vec![ret(string("negative"))],
            vec![if_else(
                eq(var("var0"), int(0)),
                vec![ret(string("zero"))],
                vec![if_else(
                    eq(rem(var("var0"), int(2)), int(0)),
                    vec![ret(string("even"))],
                    vec![ret(string("odd"))],
                )],
            )],
        )],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Sum of the odd elements, skipping evens with continue.
pub fn odd_sum() -> Program {
    let i = TypeTag::Int;
    let main = main_fn(
        vec![b("var0", TypeTag::list(i.clone()))],
        i.clone(),
        vec![b("var1", i.clone()), b("var2", i)],
        vec![
            assign(var("var1"), int(0)),
            assign(var("var2"), int(0)),
            while_inc(
                lt(var("var2"), len(var("var0"))),
                "var2",
                vec![
                    if_(eq(rem(idx(var("var0"), var("var2")), int(2)), int(0)), vec![cont()]),
                    assign(var("var1"), add(var("var1"), idx(var("var0"), var("var2")))),
                ],
            ),
            ret(var("var1")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Shifts lowercase letters by `var1` places, wrapping within a-z.
pub fn caesar() -> Program {
    let i = TypeTag::Int;
    let c = TypeTag::Char;
    let s = TypeTag::String;
    let main = main_fn(
        vec![b("var0", s.clone()), b("var1", i)],
        s.clone(),
        vec![b("var2", s), b("var3", c.clone()), b("var4", c)],
        vec![
            assign(var("var2"), string("")),
            for_each(
                "var3",
                var("var0"),
                vec![
                    assign(var("var4"), var("var3")),
                    if_(
                        and(ge(var("var3"), int(97)), le(var("var3"), int(122))),
                        vec![assign(
                            var("var4"),
                            add(rem(add(sub(var("var3"), int(97)), var("var1")), int(26)), int(97)),
                        )],
                    ),
                    assign(var("var2"), call("concat_string", vec![var("var2"), var("var4")])),
                ],
            ),
            ret(var("var2")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Sorted distinct values of a list.
pub fn sorted_distinct() -> Program {
    let i = TypeTag::Int;
    let li = TypeTag::list(i.clone());
    let main = main_fn(
        vec![b("var0", li.clone())],
        li.clone(),
        vec![b("var1", TypeTag::set(i.clone())), b("var2", li), b("var3", i)],
        vec![
            assign(var("var1"), new_container(vec![])),
            assign(var("var2"), new_container(vec![])),
            for_each(
                "var3",
                var("var0"),
                vec![if_(
                    not(call("set_contains", vec![var("var1"), var("var3")])),
                    vec![
                        expr_stmt(call("set_add", vec![var("var1"), var("var3")])),
                        expr_stmt(call("array_push", vec![var("var2"), var("var3")])),
                    ],
                )],
            ),
            expr_stmt(call("sort", vec![var("var2")])),
            ret(var("var2")),
        ],
    );
    Program::new(vec![], vec![main], "__main__")
}

/// Hand-built problems with their inputs; expected outputs come from the
/// interpreter.
pub fn hand_built() -> Vec<Problem> {
    let pairs = |xs: &[(i64, i64)]| -> Vec<Vec<Value>> {
        xs.iter().map(|(a, b)| vec![Value::Int(*a), Value::Int(*b)]).collect()
    };
    let strs = |xs: &[&str]| -> Vec<Vec<Value>> { xs.iter().map(|s| vec![Value::str(s)]).collect() };
    let lists = |xs: &[&[i64]]| -> Vec<Vec<Value>> { xs.iter().map(|l| vec![ints(l)]).collect() };
    vec![
        problem(
            "trains",
            trains(),
            pairs(&[(3, 7), (5, 3), (2, 3), (1, 2), (4, 6), (10, 15), (7, 3), (9, 12), (30, 20), (8, 5)]),
        ),
        problem(
            "haar-feature",
            haar_feature(),
            vec![
                vec![Value::Int(8), grid(&["BBBBBBBB", "BBBBBBBB", "BBBBBBBB", "WWWWWWWW", "WWWWWWWW", "WWWWWWWW"])],
                vec![Value::Int(3), grid(&["WBW", "BWW", "WWW"])],
                vec![Value::Int(6), grid(&["WWBBWW", "WWBBWW", "WWBBWW"])],
                vec![Value::Int(4), grid(&["BBBB", "BBBB", "BBBB", "BBBW"])],
                vec![Value::Int(1), grid(&["W"])],
                vec![Value::Int(2), grid(&["WB", "BW"])],
                vec![Value::Int(3), grid(&["BBB"])],
                vec![Value::Int(1), grid(&["B", "W", "B"])],
            ],
        ),
        problem(
            "digit-weights",
            digit_weights(),
            strs(&["12=3", "", "=", "9", "a1b2", "7=7=7", "0000", "5+5"]),
        ),
        problem(
            "sentinel-max",
            sentinel_max(),
            lists(&[&[], &[3], &[-5, -2], &[1, 5, 2, 8, 3], &[-1, -1, 0], &[4, 4, 4]]),
        ),
        problem(
            "long-words",
            long_words(),
            vec![
                vec![Value::str("the quick brown fox"), Value::Int(3)],
                vec![Value::str(""), Value::Int(0)],
                vec![Value::str("  spaced   out  words "), Value::Int(4)],
                vec![Value::str("a bb ccc dddd"), Value::Int(1)],
                vec![Value::str("one"), Value::Int(5)],
                vec![Value::str("tab\tseparated words"), Value::Int(2)],
            ],
        ),
        problem(
            "call-counter",
            call_counter(),
            (0..8).map(|n| vec![Value::Int(n)]).collect(),
        ),
        problem(
            "char-frequency",
            char_frequency(),
            strs(&["", "a", "banana", "mississippi", "abc abc", "zzzz"]),
        ),
        problem(
            "mean-value",
            mean_value(),
            lists(&[&[], &[1], &[1, 2], &[1, 2, 4], &[-3, 3, 7], &[10, 11, 12, 13]]),
        ),
        problem(
            "quot-rem",
            quot_rem(),
            pairs(&[(7, 2), (-7, 2), (7, -2), (-7, -2), (0, 5), (13, 13), (-1, 3), (100, 7)]),
        ),
        problem(
            "reverse-string",
            reverse_string(),
            strs(&["", "a", "ab", "hello", "race car", "12345"]),
        ),
        problem(
            "euclid",
            euclid(),
            pairs(&[(12, 18), (7, 3), (0, 5), (5, 0), (-12, 8), (100, 75), (17, 17), (1, 99)]),
        ),
        problem(
            "find-index",
            find_index(),
            vec![
                vec![ints(&[]), Value::Int(1)],
                vec![ints(&[1, 2, 3]), Value::Int(2)],
                vec![ints(&[5, 5, 5]), Value::Int(5)],
                vec![ints(&[4, 3, 2]), Value::Int(9)],
                vec![ints(&[0, -1, -2]), Value::Int(-2)],
            ],
        ),
        problem(
            "classify-number",
            classify_number(),
            [-7, -2, 0, 1, 2, 15, 40].iter().map(|n| vec![Value::Int(*n)]).collect(),
        ),
        problem(
            "odd-sum",
            odd_sum(),
            lists(&[&[], &[2, 4], &[1, 2, 3], &[-3, -2, 5], &[7, 7, 7, 8]]),
        ),
        problem(
            "caesar",
            caesar(),
            vec![
                vec![Value::str("abc"), Value::Int(1)],
                vec![Value::str("xyz"), Value::Int(3)],
                vec![Value::str("Hello, world"), Value::Int(13)],
                vec![Value::str(""), Value::Int(5)],
                vec![Value::str("zz top"), Value::Int(26)],
            ],
        ),
        problem(
            "sorted-distinct",
            sorted_distinct(),
            lists(&[&[], &[3, 1, 2], &[5, 5, 1, 5], &[-1, 4, -1, 0], &[9]]),
        ),
    ]
}

/// Profiles for the generated part of the bundle, cycled by index.
pub fn bundle_profiles() -> Vec<SizeProfile> {
    use Construct::*;
    vec![
        SizeProfile::new(14, 2),
        SizeProfile::new(8, 1),
        SizeProfile::new(20, 2),
        SizeProfile::only(12, 2, &[If, IfElse, While, Continue, Break, Lists, Division]),
        SizeProfile::only(12, 1, &[IfElse, IfChain, ForEach, Strings, Split, Ascii]),
        SizeProfile::only(12, 2, &[If, While, Globals, Calls, Division, Ternary]),
        SizeProfile::only(12, 2, &[IfElse, ForEach, Maps, Sets, Lists, Break]),
        SizeProfile::only(12, 2, &[If, While, Grids, Reals, Division]),
    ]
}

pub const GENERATED_IN_BUNDLE: usize = 24;

/// Generated problems of the bundle, `gen-00` onward.
pub fn generated() -> Vec<Problem> {
    let profiles = bundle_profiles();
    (0..GENERATED_IN_BUNDLE)
        .map(|i| {
            let profile = &profiles[i % profiles.len()];
            gen_problem(&format!("gen-{i:02}"), 1000 + i as u64, profile, 10)
                .expect("bundle seeds always yield a problem")
        })
        .collect()
}

/// Every bundled problem, hand-built first.
pub fn bundled() -> Vec<Problem> {
    let mut all = hand_built();
    all.extend(generated());
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uast::validate;

    #[test]
    fn hand_built_programs_validate() {
        for p in hand_built() {
            assert!(validate::errors(&p.program).is_empty(), "{}: {:?}", p.id, validate::errors(&p.program));
            assert!(!p.tests.is_empty());
        }
    }

    #[test]
    fn trains_matches_hand_computed_answers() {
        let p = hand_built().into_iter().find(|p| p.id == "trains").unwrap();
        let expect = ["Dasha", "Masha", "Equal"];
        for (t, e) in p.tests.iter().zip(expect) {
            assert_eq!(t.expected, Value::str(e), "{:?}", t.inputs);
        }
    }
}
