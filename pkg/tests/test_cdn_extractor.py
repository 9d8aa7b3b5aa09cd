import tempfile
import time
import unittest
from pathlib import Path

from src.graphs.io import format_graph
from src.graphs.model import TypeKind
from src.scanners.cdn_extractor import extract_cdn, extract_project
from src.scanners.source_scanner import ImportDecl, parse_source
from src.scanners.type_dictionary import (
    ResolutionContext,
    TypeDictionary,
    build_type_dictionary,
    resolve_type_name,
)
from tests.fixtures import SAMPLE_EDGES, SAMPLE_SOURCE, write_tree


def package_files(package: str, count: int) -> dict:
    """Classes that each reference four of their neighbours."""
    files = {}
    for i in range(count):
        a, b, c, d = (f"C{(i + k) % count}" for k in range(1, 5))
        files[f"{package}/C{i}.java"] = (
            f"package {package};\n"
            f"public class C{i} {{\n"
            f"    private {a} next;\n"
            f"    public {b} make({c} arg) {{ {d} local = new {d}(); return null; }}\n"
            f"}}\n"
        )
    return files


def best_extraction_time(root: Path, rounds: int = 3) -> float:
    best = float("inf")
    for _ in range(rounds):
        start = time.perf_counter()
        extract_project(root)
        best = min(best, time.perf_counter() - start)
    return best


def extract(*sources):
    units = [parse_source(text, f"F{i}.java") for i, text in enumerate(sources)]
    diagnostics = []
    dictionary = build_type_dictionary(units, diagnostics)
    return extract_cdn(units, dictionary, diagnostics), diagnostics


class TestTypeDictionary(unittest.TestCase):

    def test_sample_dictionary(self):
        dictionary = build_type_dictionary([parse_source(SAMPLE_SOURCE)])
        self.assertEqual(dictionary.entries, {
            "Ifc": TypeKind.INTERFACE,
            "Ac": TypeKind.CLASS,
            "Bc": TypeKind.CLASS,
            "Cc": TypeKind.CLASS,
        })

    def test_empty_file_list(self):
        self.assertEqual(len(build_type_dictionary([])), 0)

    def test_same_simple_name_in_two_packages(self):
        units = [
            parse_source("package p1; class A {}"),
            parse_source("package p2; class A {}"),
        ]
        dictionary = build_type_dictionary(units)
        self.assertEqual(set(dictionary.entries), {"p1.A", "p2.A"})

    def test_nested_types_are_qualified(self):
        unit = parse_source("package p; class Outer { interface Inner {} enum Kind { X } }")
        dictionary = build_type_dictionary([unit])
        self.assertEqual(dictionary.entries["p.Outer.Inner"], TypeKind.INTERFACE)
        self.assertEqual(dictionary.entries["p.Outer.Kind"], TypeKind.ENUM)

    def test_duplicate_declaration_reported(self):
        diagnostics = []
        build_type_dictionary([parse_source("class A {}"), parse_source("class A {}")], diagnostics)
        self.assertEqual([d.code for d in diagnostics], ["duplicate-type"])


class TestResolveTypeName(unittest.TestCase):

    def setUp(self):
        self.dictionary = TypeDictionary()
        for fqn, package in (("p1.A", "p1"), ("p2.A", "p2"), ("p3.A", "p3"), ("p2.B", "p2")):
            self.dictionary.add(fqn, TypeKind.CLASS, package, True)

    def test_default_package(self):
        dictionary = build_type_dictionary([parse_source(SAMPLE_SOURCE)])
        self.assertEqual(resolve_type_name("Cc", ResolutionContext(), dictionary), "Cc")

    def test_external_type(self):
        context = ResolutionContext(package="p1")
        self.assertIsNone(resolve_type_name("String", context, self.dictionary))

    def test_explicit_import_wins(self):
        context = ResolutionContext(package="p1", imports=(ImportDecl("p2.A"),))
        self.assertEqual(resolve_type_name("A", context, self.dictionary), "p2.A")

    def test_same_package_before_wildcard(self):
        context = ResolutionContext(package="p1", imports=(ImportDecl("p2", wildcard=True),))
        self.assertEqual(resolve_type_name("A", context, self.dictionary), "p1.A")

    def test_ambiguous_wildcard_takes_first_and_reports(self):
        context = ResolutionContext(
            package="q", imports=(ImportDecl("p3", wildcard=True), ImportDecl("p2", wildcard=True))
        )
        diagnostics = []
        self.assertEqual(resolve_type_name("A", context, self.dictionary, diagnostics), "p3.A")
        self.assertEqual([d.code for d in diagnostics], ["ambiguous-import"])

    def test_qualified_name(self):
        self.assertEqual(resolve_type_name("p2.B", ResolutionContext(package="p1"), self.dictionary), "p2.B")

    def test_import_of_external_type_shadows(self):
        context = ResolutionContext(package="p1", imports=(ImportDecl("java.util.A"),))
        self.assertIsNone(resolve_type_name("A", context, self.dictionary))


class TestExtractCdn(unittest.TestCase):

    def test_sample_golden(self):
        graph, _ = extract(SAMPLE_SOURCE)
        self.assertEqual(set(graph.nodes), {"Ifc", "Ac", "Bc", "Cc"})
        self.assertEqual(set(graph.edge_keys()), SAMPLE_EDGES)

    def test_class_without_references(self):
        graph, _ = extract("class Lonely { String s; }")
        self.assertEqual(list(graph.nodes), ["Lonely"])
        self.assertEqual(graph.edges, ())

    def test_static_method_call(self):
        graph, _ = extract("class A { void m() { B.staticMethod(); } }", "class B { static void staticMethod() {} }")
        self.assertEqual(graph.edge_keys(), (("A", "B", "SMC"),))

    def test_field_qualified_call_is_not_static(self):
        graph, _ = extract("class A { B b; void m() { b.run(); } }", "class B { void run() {} }")
        self.assertEqual(graph.edge_keys(), (("A", "B", "CM"),))

    def test_local_variable_and_parameter_qualifiers(self):
        source = "class A { void m(B arg) { B local = arg; local.run(); arg.run(); } }"
        graph, _ = extract(source, "class B { void run() {} }")
        self.assertEqual(set(graph.edge_keys()), {("A", "B", "P"), ("A", "B", "V")})

    def test_static_fields_and_interface_constants(self):
        graph, _ = extract(
            "class A { static B shared; }",
            "interface K { B DEFAULT = null; }",
            "class B {}",
        )
        self.assertEqual(set(graph.edge_keys()), {("A", "B", "SCM"), ("K", "B", "SCM")})

    def test_generic_arguments_are_erased(self):
        graph, _ = extract("import java.util.List; class A { List<B> items; }", "class B {}")
        self.assertEqual(graph.edges, ())

    def test_array_refers_to_element_type(self):
        graph, _ = extract("class A { B[] items; void m() { Object o = new B[3]; } }", "class B {}")
        self.assertEqual(set(graph.edge_keys()), {("A", "B", "CM"), ("A", "B", "OI")})

    def test_annotations_on_all_sites(self):
        source = "@M class A { @M int x; @M void f(@M int y) {} }"
        graph, _ = extract(source, "@interface M {}")
        self.assertEqual(graph.edge_keys(), (("A", "M", "A"),))

    def test_self_references_dropped(self):
        graph, _ = extract("class Node { Node next; Node copy() { return new Node(); } }")
        self.assertEqual(graph.edges, ())

    def test_nested_type_is_a_node(self):
        graph, _ = extract("class Outer { static class Inner {} Inner make() { return null; } }")
        self.assertIn("Outer.Inner", graph.nodes)
        self.assertEqual(graph.edge_keys(), (("Outer", "Outer.Inner", "R"),))

    def test_catch_and_try_resource_variables(self):
        source = "class A { void m() { try (R r = open()) { } catch (Boom e) { } } R open() { return null; } }"
        graph, _ = extract(source, "class R implements AutoCloseable { public void close() {} }", "class Boom extends RuntimeException {}")
        self.assertIn(("A", "Boom", "V"), graph.edge_keys())
        self.assertIn(("A", "R", "V"), graph.edge_keys())

    def test_edges_only_between_dictionary_types(self):
        graph, _ = extract(SAMPLE_SOURCE, "import java.util.Map; class D extends Ac { Map m; }")
        for source, target, _ in graph.edge_keys():
            self.assertIn(source, graph.nodes)
            self.assertIn(target, graph.nodes)


class TestExtractProject(unittest.TestCase):

    def test_syntax_error_file_is_skipped(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = write_tree(Path(tmp), {
                "sample/Sample.java": SAMPLE_SOURCE,
                "broken/Broken.java": "class Broken { void m( }",
            })
            result = extract_project(root)
        self.assertEqual(set(result.graph.edge_keys()), SAMPLE_EDGES)
        self.assertEqual([d.code for d in result.diagnostics], ["syntax-error"])
        self.assertEqual(result.diagnostics[0].file, "broken/Broken.java")

    def test_parallel_extraction_matches_sequential(self):
        files = {f"p{i}/A{i}.java": f"package p{i}; import p0.*; class A{i} extends p0.A0 {{ }}" for i in range(1, 6)}
        files["p0/A0.java"] = "package p0; public class A0 { }"
        with tempfile.TemporaryDirectory() as tmp:
            root = write_tree(Path(tmp), files)
            sequential = extract_project(root, workers=1)
            parallel = extract_project(root, workers=4)
        self.assertEqual(format_graph(sequential.graph), format_graph(parallel.graph))
        self.assertEqual(len(sequential.graph.edges), 5)

    def test_second_package_scales_linearly(self):
        with tempfile.TemporaryDirectory() as tmp:
            one = write_tree(Path(tmp) / "one", package_files("p1", 80))
            two = write_tree(Path(tmp) / "two", {**package_files("p1", 80), **package_files("p2", 80)})
            self.assertEqual(len(extract_project(two).graph.nodes), 160)
            single, double = best_extraction_time(one), best_extraction_time(two)
        self.assertLess(double, 3 * single)


if __name__ == '__main__':
    unittest.main()
