"""
Sphinx helpers for documenting settings and default values.
"""

from importlib import import_module
from inspect import getsource

from docutils import nodes
from docutils.parsers.rst import Directive
from sphinx import addnodes


def setup(app):
    app.add_crossref_type(
        directivename="setting",
        rolename="setting",
        indextemplate="pair: %s; setting",
    )
    app.add_directive('pprint', PrettyPrintIterable)
    return {'parallel_read_safe': True}


class PrettyPrintIterable(Directive):
    """Show the source of a module level dict, tuple or list, e.g.
    ``.. pprint:: huggiebot.scenarios.SCENARIO_KEYS``.
    """
    required_arguments = 1

    def run(self):
        module_path, member_name = self.arguments[0].rsplit('.', 1)
        src = getsource(import_module(module_path)).split('\n')

        start = end = None
        depth = 0
        for i, line in enumerate(src):
            if start is None and line.startswith(member_name):
                start = i
            if start is None:
                continue
            depth += sum(line.count(b) for b in "([{")
            depth -= sum(line.count(b) for b in ")]}")
            if depth == 0:
                end = i + 1
                break

        code = '\n'.join(src[start:end])
        literal = nodes.literal_block(code, code)
        literal['language'] = 'python'
        return [addnodes.desc_content('', literal)]
