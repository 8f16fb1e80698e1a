import os, subprocess, sys

print("List of input point sets:")
dataset_list = sorted(f for f in os.listdir('datasets') if f.endswith('.csv'))
print(dataset_list)

# Making output directory.
if not os.path.exists('output'):
    os.mkdir('output')
    print("Directory output created.")
else:
    print("Directory output already exists.")

print("**Starting r-gather clustering***")

# Clustering every point file in the datasets folder
for dataset in dataset_list:
    scriptfile = 'rgather_task.py'
    inputpath = 'datasets/' + dataset
    label = os.path.splitext(dataset)[0]
    with open('output/' + label + '.json', 'w') as out:
        subprocess.run(args=[sys.executable, scriptfile, 'cluster', '--input', inputpath, '--r', '2', '--mode', 'exact', '--report-cost'], stdout=out)
