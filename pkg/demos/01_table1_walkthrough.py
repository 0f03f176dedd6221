"""Two APs, two receivers each, two packets per AP: replay the worked example.

R1 and R3 sit in the overlap region. After the batch, R1 misses c1, R2 misses
c2, R3 misses c4 and R4 misses c3. Retransmissions are lossless here.
"""
from jncsim.engine import TABLE1_MATRIX, parse_matrix, replay_matrix

# %%
matrix = parse_matrix(TABLE1_MATRIX)
print(TABLE1_MATRIX)

# %%
for proto in ("arq", "dnc", "jnc"):
    trace = []
    res = replay_matrix(matrix, proto, trace=trace)
    print(f"{proto}: {res.retransmissions} slot(s)")
    for line in trace:
        print("   ", line)

# one collided slot does the job of four ARQ slots
