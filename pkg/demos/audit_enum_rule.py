"""
Auditing a corpus under two enum rules
--------------------------------------

A synthetic corpus where some rows send ``null`` for optional enum
parameters. The legacy rule rejects them; the corrected rule accepts them.
"""

from callforge import fixtures
from callforge.audit_repair import audit, format_audit

inventory = fixtures.raw_inventory()
dead = [t.name for t in inventory if fixtures.has_optional_enum(t)][:2]
rows = fixtures.make_corpus(3000, seed=1, inventory=inventory, null_enum_count=600, dead_tools=dead, empty_queries=5)

report = audit(rows, inventory)
print(format_audit(report))

print("restored by the corrected rule:", report.samples_restored_by_fix)
print("dead under legacy rule:", report.dead_tools)
print("revived:", report.revived_tools)
print("duplicate groups:", len(report.duplicate_tool_groups))
